#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "parc/analysis.hpp"
#include "parc/langsim.hpp"

namespace parc {

// A bundled table of published numbers. On disk: fixtures/<name>.jsonl, whose
// first line is a header {"fixture", "anchor", ...} naming the source table,
// plus fixtures/<name>.sha256 in sha256sum format.
struct ReferenceFixture {
  std::string name;
  std::string anchor;
  std::vector<nlohmann::ordered_json> rows;
};

inline constexpr std::string_view kKnownFixtures[] = {"langsim_10", "fifty_pairs", "overview",
                                                      "amazon_correlations", "test_sets"};

// $PARC_FIXTURE_DIR if set, else the directory the project was built from.
std::filesystem::path default_fixture_dir();

// Throws ConfigError for an unknown name and DataError for a checksum mismatch.
ReferenceFixture load_fixture(std::string_view name, const std::filesystem::path& dir = default_fixture_dir());

// Parses and checksum-verifies a fixture file directly.
ReferenceFixture load_fixture_file(const std::filesystem::path& jsonl_path);

// --- typed views ---

struct LanguageFeatureRow {
  std::string language;
  std::array<double, kNumFeatures> per_feature{};
  double sim = 0.0;
  int wiki_size = 0;
};

struct OverviewRow {
  std::string method;
  std::vector<std::string> columns;
  std::vector<double> values;  // per column, excluding the average
  double average = 0.0;        // as printed
};

struct TestSetShape {
  std::string task;
  std::size_t size = 0;
  std::size_t num_labels = 0;
};

std::vector<LanguageFeatureRow> language_feature_rows(const ReferenceFixture& f);
std::vector<LanguagePairRow> language_pair_rows(const ReferenceFixture& f);
std::vector<ExpectedCell> expected_correlations(const ReferenceFixture& f);
std::vector<OverviewRow> overview_rows(const ReferenceFixture& f);
std::vector<TestSetShape> test_set_shapes(const ReferenceFixture& f);

}  // namespace parc
