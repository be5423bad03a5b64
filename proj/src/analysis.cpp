#include "parc/analysis.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "parc/error.hpp"

namespace parc {

std::string_view to_string(CorrelationMethod m) {
  return m == CorrelationMethod::kSpearman ? "spearman" : "pearson";
}

std::string_view to_string(PValueMethod m) { return m == PValueMethod::kTApprox ? "t_approx" : "permutation"; }

std::string_view to_string(Setting s) { return s == Setting::kLabeled ? "labeled" : "unlabeled"; }

std::string_view to_string(Factor f) {
  switch (f) {
    case Factor::kSimilarity:
      return "similarity";
    case Factor::kSourceSize:
      return "source_size";
    case Factor::kTargetSize:
      return "target_size";
  }
  return "?";
}

namespace {

void check_series(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DataError("length mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (x.size() < 3) throw DataError("correlation needs at least 3 observations");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw DataError("non-finite observation");
  }
}

// Centered series and its sum of squares.
double center(std::span<const double> v, std::vector<double>& out) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  out.resize(v.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i] - mean;
    ss += out[i] * out[i];
  }
  return ss;
}

double centered_r(std::span<const double> cx, std::span<const double> cy, double sx, double sy) {
  double sxy = 0.0;
  for (std::size_t i = 0; i < cx.size(); ++i) sxy += cx[i] * cy[i];
  return std::clamp(sxy / std::sqrt(sx * sy), -1.0, 1.0);
}

CorrelationResult finish(std::span<const double> x, std::span<const double> y, CorrelationMethod method,
                         const CorrelationOptions& options) {
  CorrelationResult r;
  r.n = x.size();
  r.method = method;
  r.p_method = options.p_method;
  r.coefficient = pearson_coefficient(x, y);
  r.p_value = options.p_method == PValueMethod::kTApprox ? t_approx_p_value(r.coefficient, r.n)
                                                         : permutation_p_value(x, y, options);
  return r;
}

}  // namespace

double pearson_coefficient(std::span<const double> x, std::span<const double> y) {
  check_series(x, y);
  std::vector<double> cx, cy;
  const double sx = center(x, cx);
  const double sy = center(y, cy);
  if (sx == 0.0 || sy == 0.0) throw DataError("zero variance series");
  return centered_r(cx, cy, sx, sy);
}

std::vector<double> fractional_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    // Positions i..j (0-based) share the mean of ranks i+1..j+1.
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y,
                          const CorrelationOptions& options) {
  return finish(x, y, CorrelationMethod::kPearson, options);
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y,
                           const CorrelationOptions& options) {
  check_series(x, y);
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  return finish(rx, ry, CorrelationMethod::kSpearman, options);
}

double t_approx_p_value(double r, std::size_t n) {
  if (n < 3) throw DataError("t approximation needs n >= 3");
  const double df = static_cast<double>(n - 2);
  const double denom = 1.0 - r * r;
  if (denom <= 0.0) return 0.0;
  const double t = std::abs(r) * std::sqrt(df / denom);
  const boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, t)), 0.0, 1.0);
}

double permutation_p_value(std::span<const double> x, std::span<const double> y,
                           const CorrelationOptions& options) {
  check_series(x, y);
  std::vector<double> cx, cy;
  const double sx = center(x, cx);
  const double sy = center(y, cy);
  if (sx == 0.0 || sy == 0.0) throw DataError("zero variance series");
  const double observed = std::abs(centered_r(cx, cy, sx, sy)) - 1e-12;
  const std::size_t n = x.size();

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<double> permuted(n);
  auto r_of = [&] {
    for (std::size_t i = 0; i < n; ++i) permuted[i] = cy[perm[i]];
    return std::abs(centered_r(cx, permuted, sx, sy));
  };

  if (n <= options.exact_limit) {
    std::uint64_t total = 0, extreme = 0;
    do {
      ++total;
      if (r_of() >= observed) ++extreme;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(extreme) / static_cast<double>(total);
  }

  if (options.resamples == 0) throw ConfigError("permutation test needs resamples > 0");
  std::mt19937_64 rng(options.seed);
  std::uint64_t extreme = 0;
  for (std::size_t s = 0; s < options.resamples; ++s) {
    for (std::size_t i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(perm[i], perm[pick(rng)]);
    }
    if (r_of() >= observed) ++extreme;
  }
  return static_cast<double>(extreme + 1) / static_cast<double>(options.resamples + 1);
}

std::size_t CorrelationReport::deviations() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const CorrelationCell& c) {
    return !c.coefficient_ok || !c.significance_ok;
  }));
}

std::string CorrelationReport::render() const {
  std::string out;
  char buf[256];
  for (Setting setting : {Setting::kUnlabeled, Setting::kLabeled}) {
    std::snprintf(buf, sizeof(buf), "%-10s %-18s %-18s %-18s\n",
                  setting == Setting::kLabeled ? "Labeled" : "Unlabeled", "Sim.", "source size", "target size");
    out += buf;
    for (CorrelationMethod method : {CorrelationMethod::kSpearman, CorrelationMethod::kPearson}) {
      std::snprintf(buf, sizeof(buf), "%-10s", method == CorrelationMethod::kSpearman ? "Spearman" : "Pearson");
      out += buf;
      std::string flags;
      for (Factor factor : {Factor::kSimilarity, Factor::kSourceSize, Factor::kTargetSize}) {
        for (const auto& c : cells) {
          if (c.setting != setting || c.factor != factor || c.result.method != method) continue;
          std::snprintf(buf, sizeof(buf), " %6.2f %-9.2g%s", c.result.coefficient, c.result.p_value,
                        c.significant ? " " : "*");
          out += buf;
          if (!c.coefficient_ok) flags += " coef-dev(" + std::string(to_string(factor)) + ")";
          if (!c.significance_ok) flags += " sig-mismatch(" + std::string(to_string(factor)) + ")";
        }
      }
      out += flags.empty() ? "  ok" : "  DEVIATION:" + flags;
      out += '\n';
    }
  }
  std::snprintf(buf, sizeof(buf), "*: p >= %.2f. Tolerance on coefficients: +/-%.2f. Deviating cells: %zu\n",
                kSignificanceLevel, tolerance, deviations());
  out += buf;
  return out;
}

CorrelationReport reproduce_pair_correlations(std::span<const LanguagePairRow> rows, ColumnMapping mapping,
                                               std::span<const ExpectedCell> expected, double tolerance,
                                               const CorrelationOptions& options) {
  if (rows.size() != kLanguagePairRows) {
    throw DataError("language-pair table has " + std::to_string(rows.size()) + " rows, expected " +
                    std::to_string(kLanguagePairRows));
  }
  if (mapping.labeled == mapping.unlabeled) {
    throw ConfigError("labeled and unlabeled settings map to the same performance column");
  }
  auto column = [&rows](PerfColumn c) {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(c == PerfColumn::kFirst ? r.perf_first : r.perf_second);
    return v;
  };
  std::vector<double> sim, src, tgt;
  for (const auto& r : rows) {
    sim.push_back(r.sim);
    src.push_back(r.source_size);
    tgt.push_back(r.target_size);
  }

  CorrelationReport report;
  report.tolerance = tolerance;
  for (Setting setting : {Setting::kUnlabeled, Setting::kLabeled}) {
    const auto perf = column(setting == Setting::kLabeled ? mapping.labeled : mapping.unlabeled);
    for (Factor factor : {Factor::kSimilarity, Factor::kSourceSize, Factor::kTargetSize}) {
      const auto& x = factor == Factor::kSimilarity ? sim : factor == Factor::kSourceSize ? src : tgt;
      for (CorrelationMethod method : {CorrelationMethod::kSpearman, CorrelationMethod::kPearson}) {
        CorrelationCell cell;
        cell.setting = setting;
        cell.factor = factor;
        cell.result = method == CorrelationMethod::kSpearman ? spearman(perf, x, options)
                                                             : pearson(perf, x, options);
        cell.significant = cell.result.p_value < kSignificanceLevel;
        for (const auto& e : expected) {
          if (e.setting == setting && e.factor == factor && e.method == method) {
            cell.expected = e;
            cell.coefficient_ok = std::abs(cell.result.coefficient - e.coefficient) <= tolerance;
            cell.significance_ok = cell.significant == e.significant;
          }
        }
        report.cells.push_back(cell);
      }
    }
  }
  return report;
}

}  // namespace parc
