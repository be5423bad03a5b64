#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace parc {

enum class CorrelationMethod { kSpearman, kPearson };
enum class PValueMethod { kTApprox, kPermutation };

std::string_view to_string(CorrelationMethod m);
std::string_view to_string(PValueMethod m);

struct CorrelationOptions {
  PValueMethod p_method = PValueMethod::kTApprox;
  // Permutation test: exhaustive when n <= exact_limit, otherwise Monte Carlo.
  std::size_t exact_limit = 8;
  std::size_t resamples = 20000;
  std::uint64_t seed = 0x5EED;
};

struct CorrelationResult {
  double coefficient = 0.0;
  double p_value = 1.0;  // two-sided
  std::size_t n = 0;
  CorrelationMethod method = CorrelationMethod::kPearson;
  PValueMethod p_method = PValueMethod::kTApprox;
};

// Significance threshold used for the starred/unstarred distinction.
inline constexpr double kSignificanceLevel = 0.05;

// Product-moment coefficient only; throws DataError on length mismatch,
// n < 3, or zero variance.
double pearson_coefficient(std::span<const double> x, std::span<const double> y);

// 1-based fractional ranks; ties share their average rank.
std::vector<double> fractional_ranks(std::span<const double> x);

CorrelationResult pearson(std::span<const double> x, std::span<const double> y,
                          const CorrelationOptions& options = {});
CorrelationResult spearman(std::span<const double> x, std::span<const double> y,
                           const CorrelationOptions& options = {});

// Two-sided p-value of r under H0 via Student's t with n - 2 degrees of freedom.
double t_approx_p_value(double r, std::size_t n);

// Two-sided permutation p-value: share of permutations of y whose |r| reaches
// the observed |r| (up to 1e-12). Pearson on the given series; pass ranks for
// Spearman.
double permutation_p_value(std::span<const double> x, std::span<const double> y,
                           const CorrelationOptions& options = {});

// --- reproduction of the language-pair correlation study ------------------

enum class Setting { kUnlabeled, kLabeled };
enum class Factor { kSimilarity, kSourceSize, kTargetSize };

std::string_view to_string(Setting s);
std::string_view to_string(Factor f);

struct LanguagePairRow {
  std::string pair;
  double perf_first = 0.0;   // first printed performance column
  double perf_second = 0.0;  // second printed performance column
  std::array<double, 5> features{};
  double sim = 0.0;
  double source_size = 0.0;
  double target_size = 0.0;
};

// Which printed performance column holds which setting.
enum class PerfColumn { kFirst, kSecond };
struct ColumnMapping {
  PerfColumn labeled;
  PerfColumn unlabeled;
};

struct ExpectedCell {
  Setting setting;
  Factor factor;
  CorrelationMethod method;
  double coefficient;
  double p_value;
  bool significant;  // the published cell is not starred
};

struct CorrelationCell {
  Setting setting;
  Factor factor;
  CorrelationResult result;
  bool significant = false;  // p < kSignificanceLevel
  std::optional<ExpectedCell> expected;
  bool coefficient_ok = true;
  bool significance_ok = true;
};

struct CorrelationReport {
  std::vector<CorrelationCell> cells;  // setting x factor x method, fixed order
  double tolerance = 0.03;
  std::size_t deviations() const;
  // Table in the published layout, with a flag column.
  std::string render() const;
};

inline constexpr std::size_t kLanguagePairRows = 50;

// Twelve cells (2 settings x 3 factors x 2 methods). Throws DataError unless
// the table has exactly 50 rows.
CorrelationReport reproduce_pair_correlations(std::span<const LanguagePairRow> rows, ColumnMapping mapping,
                                               std::span<const ExpectedCell> expected = {},
                                               double tolerance = 0.03, const CorrelationOptions& options = {});

}  // namespace parc
