#include <doctest.h>

#include <cmath>
#include <random>

#include "parc/error.hpp"
#include "parc/langsim.hpp"
#include "support.hpp"

using namespace parc;

namespace {

LanguageProfile profile(std::string code, int wiki, std::vector<std::optional<double>> all_features) {
  LanguageProfile p;
  p.code = std::move(code);
  p.wiki_size = wiki;
  for (auto& f : p.features) f = all_features;
  return p;
}

// Random binary profiles with about 20% of entries missing.
std::vector<LanguageProfile> random_profiles(std::mt19937& rng, std::size_t n, std::size_t dims) {
  std::bernoulli_distribution bit(0.5), gap(0.2);
  std::vector<LanguageProfile> out;
  for (std::size_t i = 0; i < n; ++i) {
    LanguageProfile p;
    p.code = "l" + std::to_string(i);
    p.wiki_size = static_cast<int>(i % 15);
    for (auto& f : p.features) {
      for (std::size_t d = 0; d < dims; ++d) {
        // The first row is complete so every dimension is observed somewhere.
        if (i > 0 && gap(rng)) {
          f.push_back(std::nullopt);
        } else {
          f.push_back(bit(rng) ? 1.0 : 0.0);
        }
      }
      (*f.begin()) = 1.0;  // keep every vector nonzero
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

TEST_CASE("low-resource threshold") {
  CHECK(is_low_resource(profile("af", 6, {1.0})));
  CHECK_FALSE(is_low_resource(profile("en", 14, {1.0})));
  CHECK_FALSE(is_low_resource(profile("ur", 7, {1.0})));
}

TEST_CASE("aggregate is the mean of the five feature scores") {
  const std::array<double, kNumFeatures> af{84.9, 60.3, 38.4, 50.4, 33.1};
  const std::array<double, kNumFeatures> jv{48.0, 39.2, 52.7, 0.0, 0.0};
  CHECK(aggregate_similarity(af) == doctest::Approx(53.42));
  CHECK(aggregate_similarity(jv) == doctest::Approx(27.98));
}

TEST_CASE("imputation uses the nearest observed neighbours") {
  const std::vector<LanguageProfile> ps{profile("a", 5, {1.0, 1.0, std::nullopt}), profile("b", 5, {1.0, 1.0, 0.0}),
                                        profile("c", 5, {0.0, 1.0, 1.0})};
  const auto k2 = impute_missing(ps, 2);
  CHECK(*k2[0].features[0][2] == doctest::Approx(0.5));
  // With k=1 only the closest language ("b", cosine 1) votes.
  CHECK(*k2[0].features[0][2] != *impute_missing(ps, 1)[0].features[0][2]);
  CHECK(*impute_missing(ps, 1)[0].features[0][2] == 0.0);
  CHECK(k2[1].features == ps[1].features);
  CHECK(k2[0].complete());
}

TEST_CASE("imputation leaves complete profiles alone and is idempotent") {
  std::mt19937 rng(51);
  const auto ps = random_profiles(rng, 12, 9);
  const auto once = impute_missing(ps);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    CHECK(once[i].complete());
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      for (std::size_t d = 0; d < 9; ++d) {
        if (ps[i].features[f][d]) CHECK(*once[i].features[f][d] == *ps[i].features[f][d]);
      }
    }
  }
  const auto twice = impute_missing(once);
  for (std::size_t i = 0; i < ps.size(); ++i) CHECK(twice[i].features == once[i].features);
}

TEST_CASE("imputation errors") {
  const std::vector<LanguageProfile> ok{profile("a", 1, {1.0, 0.0}), profile("b", 1, {0.0, 1.0})};
  CHECK_THROWS_AS(impute_missing(ok, 0), ConfigError);
  const std::vector<LanguageProfile> ragged{profile("a", 1, {1.0, 0.0}), profile("b", 1, {1.0})};
  CHECK_THROWS_AS(impute_missing(ragged), DataError);
  const std::vector<LanguageProfile> empty_dim{profile("a", 1, {1.0, std::nullopt}),
                                               profile("b", 1, {1.0, std::nullopt})};
  CHECK_THROWS_AS(impute_missing(empty_dim), DataError);
  const std::vector<LanguageProfile> blank{profile("a", 1, {1.0, 1.0}), profile("b", 1, {std::nullopt, std::nullopt})};
  CHECK_THROWS_AS(impute_missing(blank), DataError);
  CHECK(impute_missing(std::vector<LanguageProfile>{}).empty());
}

TEST_CASE("feature_cosine") {
  CHECK(feature_cosine({1.0, 0.0}, {1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(feature_cosine({1.0, 0.0}, {0.0, 1.0}) == 0.0);
  CHECK(feature_cosine({0.0, 0.0}, {0.0, 1.0}) == 0.0);
  CHECK_THROWS_AS(feature_cosine({1.0, std::nullopt}, {1.0, 0.0}), DataError);
  CHECK_THROWS_AS(feature_cosine({1.0}, {1.0, 0.0}), DataError);
}

TEST_CASE("batch similarity is symmetric, bounded and peaks on self pairs") {
  std::mt19937 rng(52);
  const auto ps = impute_missing(random_profiles(rng, 10, 12));
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 1; i < ps.size(); ++i) pairs.emplace_back(ps[0].code, ps[i].code);
  const SimilarityBatch batch(ps, pairs);
  const auto reports = batch.all();
  REQUIRE(reports.size() == pairs.size());
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    double lo = 100.0, hi = 0.0;
    for (const auto& r : reports) {
      lo = std::min(lo, r.per_feature[f]);
      hi = std::max(hi, r.per_feature[f]);
    }
    // Min-max over the batch pins the extremes.
    CHECK(lo == doctest::Approx(0.0));
    CHECK(hi == doctest::Approx(100.0));
  }
  for (const auto& [a, b] : pairs) {
    const auto ab = pairwise_similarity(a, b, batch);
    const auto ba = pairwise_similarity(b, a, batch);
    for (std::size_t f = 0; f < kNumFeatures; ++f) CHECK(ab.per_feature[f] == doctest::Approx(ba.per_feature[f]));
    CHECK(ab.aggregate == doctest::Approx(aggregate_similarity(ab.per_feature)));
    const auto self = pairwise_similarity(b, b, batch);
    for (std::size_t f = 0; f < kNumFeatures; ++f) CHECK(self.per_feature[f] == 100.0);
  }
}

TEST_CASE("batch errors") {
  const std::vector<LanguageProfile> ps{profile("a", 1, {1.0, 0.0}), profile("b", 1, {0.0, 1.0}),
                                        profile("c", 1, {1.0, 1.0})};
  // One pair means zero range on every feature.
  CHECK_THROWS_WITH_AS(SimilarityBatch(ps, {{"a", "b"}}), doctest::Contains("zero range"), DataError);
  CHECK_NOTHROW(SimilarityBatch(ps, {{"a", "b"}, {"a", "c"}}));
  CHECK_THROWS_AS(SimilarityBatch(ps, {}), DataError);
  CHECK_THROWS_AS(SimilarityBatch(ps, {{"a", "zz"}, {"a", "c"}}), DataError);
  const std::vector<LanguageProfile> gappy{profile("a", 1, {1.0, std::nullopt}), profile("b", 1, {0.0, 1.0})};
  CHECK_THROWS_AS(SimilarityBatch(gappy, {{"a", "b"}}), DataError);
}

TEST_CASE("parse_profiles and load_pairs") {
  const auto ps = parse_profiles(
      R"({"code":"sw","wiki_size":5,"features":{"SYN":[1,null],"PHO":[0],"INV":[1],"FAM":[0],"GEO":[0.5]}})"
      "\n\n"
      R"({"code":"en","wiki_size":14,"features":{"SYN":[1,1],"PHO":[1],"INV":[0],"FAM":[1],"GEO":[0.25]}})"
      "\n");
  REQUIRE(ps.size() == 2);
  CHECK(ps[0].code == "sw");
  CHECK_FALSE(ps[0].feature(Feature::kSyntax)[1].has_value());
  CHECK(*ps[1].feature(Feature::kGeography)[0] == 0.25);
  CHECK(is_low_resource(ps[0]));
  CHECK_THROWS_AS(parse_profiles(R"({"code":"x","wiki_size":1,"features":{"SYN":[1]}})"), DataError);
  CHECK_THROWS_AS(parse_profiles("{oops"), DataError);
  CHECK_THROWS_AS(
      parse_profiles(R"({"code":"x","wiki_size":-1,"features":{"SYN":[1],"PHO":[1],"INV":[1],"FAM":[1],"GEO":[1]}})"),
      DataError);

  const auto dir = testing::scratch_dir("langsim-pairs");
  testing::write_text(dir / "pairs.txt", "# comment\nen sw\n\nen  ur\n");
  const auto pairs = load_pairs(dir / "pairs.txt");
  CHECK(pairs == std::vector<std::pair<std::string, std::string>>{{"en", "sw"}, {"en", "ur"}});
  testing::write_text(dir / "bad.txt", "en sw extra\n");
  CHECK_THROWS_AS(load_pairs(dir / "bad.txt"), DataError);
  CHECK_THROWS_AS(load_pairs(dir / "missing.txt"), DataError);
}
