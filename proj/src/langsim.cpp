#include "parc/langsim.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <sstream>

#include "parc/error.hpp"
#include "parc/util.hpp"

namespace parc {

using nlohmann::json;

bool LanguageProfile::complete() const {
  for (const auto& f : features) {
    for (const auto& v : f) {
      if (!v) return false;
    }
  }
  return true;
}

bool is_low_resource(const LanguageProfile& profile) { return profile.wiki_size < kLowResourceWikiSize; }

double aggregate_similarity(std::span<const double, kNumFeatures> per_feature) {
  double sum = 0.0;
  for (double v : per_feature) sum += v;
  return sum / static_cast<double>(kNumFeatures);
}

namespace {

// Cosine over dimensions observed in both vectors.
double partial_cosine(const FeatureVector& a, const FeatureVector& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i] || !b[i]) continue;
    dot += *a[i] * *b[i];
    na += *a[i] * *a[i];
    nb += *b[i] * *b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void check_shapes(std::span<const LanguageProfile> profiles) {
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const auto name = std::string(kFeatureNames[f]);
    const std::size_t dims = profiles.front().features[f].size();
    std::vector<bool> observed(dims, false);
    for (const auto& p : profiles) {
      if (p.features[f].size() != dims) {
        throw DataError(p.code + ": " + name + " has " + std::to_string(p.features[f].size()) +
                        " dimensions, expected " + std::to_string(dims));
      }
      bool any = false;
      for (std::size_t d = 0; d < dims; ++d) {
        if (p.features[f][d]) {
          observed[d] = true;
          any = true;
        }
      }
      if (!any && dims > 0) throw DataError(p.code + ": no observed values in " + name);
    }
    for (std::size_t d = 0; d < dims; ++d) {
      if (!observed[d]) {
        throw DataError(name + " dimension " + std::to_string(d) + " is missing in every language");
      }
    }
  }
}

}  // namespace

std::vector<LanguageProfile> impute_missing(std::span<const LanguageProfile> profiles, std::size_t k) {
  if (k == 0) throw ConfigError("imputation k must be at least 1");
  std::vector<LanguageProfile> out(profiles.begin(), profiles.end());
  if (profiles.empty()) return out;
  check_shapes(profiles);

  const auto n = static_cast<std::ptrdiff_t>(profiles.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t li = 0; li < n; ++li) {
    const auto l = static_cast<std::size_t>(li);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      const auto& mine = profiles[l].features[f];
      if (std::all_of(mine.begin(), mine.end(), [](const auto& v) { return v.has_value(); })) continue;

      // Neighbours ranked once per (language, feature).
      std::vector<std::pair<double, std::size_t>> ranked;
      for (std::size_t m = 0; m < profiles.size(); ++m) {
        if (m != l) ranked.emplace_back(partial_cosine(mine, profiles[m].features[f]), m);
      }
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });

      for (std::size_t d = 0; d < mine.size(); ++d) {
        if (mine[d]) continue;
        double sum = 0.0;
        std::size_t used = 0;
        for (const auto& [sim, m] : ranked) {
          if (used == k) break;
          if (const auto& v = profiles[m].features[f][d]) {
            sum += *v;
            ++used;
          }
        }
        // check_shapes guarantees some other language observes d.
        out[l].features[f][d] = sum / static_cast<double>(used);
      }
    }
  }
  return out;
}

double feature_cosine(const FeatureVector& a, const FeatureVector& b) {
  if (a.size() != b.size()) throw DataError("feature vectors differ in length");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i] || !b[i]) throw DataError("feature vector has missing entries; impute first");
  }
  return partial_cosine(a, b);
}

SimilarityBatch::SimilarityBatch(std::vector<LanguageProfile> profiles,
                                 std::vector<std::pair<std::string, std::string>> pairs)
    : profiles_(std::move(profiles)), pairs_(std::move(pairs)) {
  if (pairs_.empty()) throw DataError("similarity batch has no pairs");
  for (const auto& p : profiles_) {
    if (!p.complete()) throw DataError("profile " + p.code + " has missing entries; impute first");
  }
  const auto n = static_cast<std::ptrdiff_t>(pairs_.size());
  std::vector<std::array<double, kNumFeatures>> raw(pairs_.size());
  // Validate names before the parallel region.
  for (const auto& [a, b] : pairs_) {
    profile(a);
    profile(b);
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& [a, b] = pairs_[static_cast<std::size_t>(i)];
    raw[static_cast<std::size_t>(i)] = raw_cosines(a, b);
  }
  min_.fill(std::numeric_limits<double>::infinity());
  max_.fill(-std::numeric_limits<double>::infinity());
  for (const auto& r : raw) {
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      min_[f] = std::min(min_[f], r[f]);
      max_[f] = std::max(max_[f], r[f]);
    }
  }
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    if (!(max_[f] > min_[f])) {
      throw DataError("degenerate normalization: " + std::string(kFeatureNames[f]) +
                      " cosines have zero range over the batch");
    }
  }
}

const LanguageProfile& SimilarityBatch::profile(std::string_view code) const {
  for (const auto& p : profiles_) {
    if (p.code == code) return p;
  }
  throw DataError("no profile for language \"" + std::string(code) + "\"");
}

std::array<double, kNumFeatures> SimilarityBatch::raw_cosines(std::string_view a, std::string_view b) const {
  const auto& pa = profile(a);
  const auto& pb = profile(b);
  std::array<double, kNumFeatures> out{};
  for (std::size_t f = 0; f < kNumFeatures; ++f) out[f] = feature_cosine(pa.features[f], pb.features[f]);
  return out;
}

SimilarityReport SimilarityBatch::similarity(std::string_view a, std::string_view b) const {
  const auto raw = raw_cosines(a, b);
  SimilarityReport r;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const double scaled = (raw[f] - min_[f]) / (max_[f] - min_[f]) * 100.0;
    r.per_feature[f] = std::clamp(scaled, 0.0, 100.0);
  }
  r.aggregate = aggregate_similarity(r.per_feature);
  return r;
}

std::vector<SimilarityReport> SimilarityBatch::all() const {
  std::vector<SimilarityReport> out;
  out.reserve(pairs_.size());
  for (const auto& [a, b] : pairs_) out.push_back(similarity(a, b));
  return out;
}

SimilarityReport pairwise_similarity(std::string_view a, std::string_view b, const SimilarityBatch& batch) {
  return batch.similarity(a, b);
}

std::vector<LanguageProfile> parse_profiles(std::string_view jsonl) {
  std::vector<LanguageProfile> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "profile line " + std::to_string(line_no);
    try {
      const auto j = json::parse(line);
      LanguageProfile p;
      p.code = j.at("code").get<std::string>();
      p.wiki_size = j.at("wiki_size").get<int>();
      if (p.wiki_size < 0) throw DataError(where + ": negative wiki_size");
      const auto& feats = j.at("features");
      for (std::size_t f = 0; f < kNumFeatures; ++f) {
        const auto& arr = feats.at(std::string(kFeatureNames[f]));
        for (const auto& v : arr) {
          if (v.is_null()) {
            p.features[f].push_back(std::nullopt);
          } else {
            const double x = v.get<double>();
            if (!std::isfinite(x)) throw DataError(where + ": non-finite feature value");
            p.features[f].push_back(x);
          }
        }
      }
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return out;
}

std::vector<LanguageProfile> load_profiles(const std::filesystem::path& path) {
  return parse_profiles(read_file(path));
}

std::vector<std::pair<std::string, std::string>> load_pairs(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string a, b, extra;
    if (!(ls >> a)) continue;
    if (a.front() == '#') continue;
    if (!(ls >> b) || (ls >> extra)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected \"source target\"");
    }
    out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

}  // namespace parc
