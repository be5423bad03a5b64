#include "parc/fixtures.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "parc/error.hpp"
#include "parc/util.hpp"

#ifndef PARC_FIXTURE_DIR
#define PARC_FIXTURE_DIR "fixtures"
#endif

namespace parc {

using nlohmann::ordered_json;

std::filesystem::path default_fixture_dir() {
  if (const char* env = std::getenv("PARC_FIXTURE_DIR"); env != nullptr && *env != '\0') return env;
  return PARC_FIXTURE_DIR;
}

ReferenceFixture load_fixture_file(const std::filesystem::path& jsonl_path) {
  const std::string body = read_file(jsonl_path);
  auto sum_path = jsonl_path;
  sum_path.replace_extension(".sha256");
  const std::string sum_line = read_file(sum_path);
  const std::string expected = sum_line.substr(0, sum_line.find_first_of(" \t\r\n"));
  const std::string actual = sha256_hex(body);
  if (expected != actual) {
    throw DataError("fixture checksum mismatch for " + jsonl_path.string() + ": expected " + expected + ", got " +
                    actual);
  }

  ReferenceFixture f;
  std::istringstream in(body);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const ordered_json::exception& e) {
      throw DataError(jsonl_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (f.name.empty()) {
      if (!j.contains("fixture") || !j.contains("anchor")) {
        throw DataError(jsonl_path.string() + ": first line must be a {\"fixture\", \"anchor\"} header");
      }
      f.name = j["fixture"].get<std::string>();
      f.anchor = j["anchor"].get<std::string>();
      continue;
    }
    f.rows.push_back(std::move(j));
  }
  if (f.name.empty()) throw DataError(jsonl_path.string() + ": empty fixture");
  return f;
}

ReferenceFixture load_fixture(std::string_view name, const std::filesystem::path& dir) {
  if (std::find(std::begin(kKnownFixtures), std::end(kKnownFixtures), name) == std::end(kKnownFixtures)) {
    throw ConfigError("unknown fixture \"" + std::string(name) + "\"");
  }
  auto f = load_fixture_file(dir / (std::string(name) + ".jsonl"));
  if (f.name != name) throw DataError("fixture file declares name \"" + f.name + "\", expected \"" + std::string(name) + "\"");
  return f;
}

namespace {

void expect_name(const ReferenceFixture& f, std::string_view name) {
  if (f.name != name) throw ConfigError("fixture \"" + f.name + "\" is not " + std::string(name));
}

template <typename Fn>
auto convert_rows(const ReferenceFixture& f, Fn fn) {
  std::vector<decltype(fn(f.rows.front()))> out;
  for (std::size_t i = 0; i < f.rows.size(); ++i) {
    try {
      out.push_back(fn(f.rows[i]));
    } catch (const ordered_json::exception& e) {
      throw DataError(f.name + " row " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

Setting parse_setting(const std::string& s) {
  if (s == "labeled") return Setting::kLabeled;
  if (s == "unlabeled") return Setting::kUnlabeled;
  throw DataError("unknown setting \"" + s + "\"");
}

Factor parse_factor(const std::string& s) {
  if (s == "similarity") return Factor::kSimilarity;
  if (s == "source_size") return Factor::kSourceSize;
  if (s == "target_size") return Factor::kTargetSize;
  throw DataError("unknown factor \"" + s + "\"");
}

CorrelationMethod parse_method(const std::string& s) {
  if (s == "spearman") return CorrelationMethod::kSpearman;
  if (s == "pearson") return CorrelationMethod::kPearson;
  throw DataError("unknown correlation method \"" + s + "\"");
}

}  // namespace

std::vector<LanguageFeatureRow> language_feature_rows(const ReferenceFixture& f) {
  expect_name(f, "langsim_10");
  return convert_rows(f, [](const ordered_json& j) {
    LanguageFeatureRow r;
    r.language = j.at("lang").get<std::string>();
    for (std::size_t i = 0; i < kNumFeatures; ++i) r.per_feature[i] = j.at(std::string(kFeatureNames[i])).get<double>();
    r.sim = j.at("SIM").get<double>();
    r.wiki_size = j.at("wiki_size").get<int>();
    return r;
  });
}

std::vector<LanguagePairRow> language_pair_rows(const ReferenceFixture& f) {
  expect_name(f, "fifty_pairs");
  return convert_rows(f, [](const ordered_json& j) {
    LanguagePairRow r;
    r.pair = j.at("pair").get<std::string>();
    r.perf_first = j.at("perf_first").get<double>();
    r.perf_second = j.at("perf_second").get<double>();
    for (std::size_t i = 0; i < kNumFeatures; ++i) r.features[i] = j.at(std::string(kFeatureNames[i])).get<double>();
    r.sim = j.at("SIM").get<double>();
    r.source_size = j.at("source").get<double>();
    r.target_size = j.at("target").get<double>();
    return r;
  });
}

std::vector<ExpectedCell> expected_correlations(const ReferenceFixture& f) {
  expect_name(f, "amazon_correlations");
  return convert_rows(f, [](const ordered_json& j) {
    return ExpectedCell{parse_setting(j.at("setting").get<std::string>()),
                        parse_factor(j.at("factor").get<std::string>()),
                        parse_method(j.at("method").get<std::string>()), j.at("coefficient").get<double>(),
                        j.at("p_value").get<double>(), j.at("significant").get<bool>()};
  });
}

std::vector<OverviewRow> overview_rows(const ReferenceFixture& f) {
  expect_name(f, "overview");
  return convert_rows(f, [](const ordered_json& j) {
    OverviewRow r;
    r.method = j.at("method").get<std::string>();
    for (const auto& [col, v] : j.at("values").items()) {
      r.columns.push_back(col);
      r.values.push_back(v.get<double>());
    }
    r.average = j.at("avg").get<double>();
    return r;
  });
}

std::vector<TestSetShape> test_set_shapes(const ReferenceFixture& f) {
  expect_name(f, "test_sets");
  return convert_rows(f, [](const ordered_json& j) {
    return TestSetShape{j.at("task").get<std::string>(), j.at("size").get<std::size_t>(),
                        j.at("num_labels").get<std::size_t>()};
  });
}

}  // namespace parc
