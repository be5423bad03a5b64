#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace parc {

// lang2vec-style feature families.
enum class Feature : std::size_t { kSyntax = 0, kPhonology, kInventory, kFamily, kGeography };
inline constexpr std::size_t kNumFeatures = 5;
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {"SYN", "PHO", "INV", "FAM",
                                                                            "GEO"};

// Languages with WikiSize below this are low-resource.
inline constexpr int kLowResourceWikiSize = 7;

// Default neighbour count for typological imputation.
inline constexpr std::size_t kDefaultImputeK = 10;

using FeatureVector = std::vector<std::optional<double>>;  // nullopt = missing

struct LanguageProfile {
  std::string code;
  int wiki_size = 0;  // log2 of Wikipedia size in MB
  std::array<FeatureVector, kNumFeatures> features;

  const FeatureVector& feature(Feature f) const { return features[static_cast<std::size_t>(f)]; }
  bool complete() const;
};

struct SimilarityReport {
  std::array<double, kNumFeatures> per_feature{};  // [0, 100]
  double aggregate = 0.0;                          // mean of per_feature
};

bool is_low_resource(const LanguageProfile& profile);

// Mean of the per-feature similarities.
double aggregate_similarity(std::span<const double, kNumFeatures> per_feature);

// Fills each missing entry with the mean of that dimension over the k most
// similar languages that observe it. Similarity is the cosine over mutually
// observed dimensions of the same feature, computed on the input profiles.
std::vector<LanguageProfile> impute_missing(std::span<const LanguageProfile> profiles,
                                            std::size_t k = kDefaultImputeK);

// Cosine of two fully observed feature vectors; 0 when either has zero norm.
double feature_cosine(const FeatureVector& a, const FeatureVector& b);

// Min-max normalization population for pairwise similarity: per feature, the
// raw cosines of every pair in the batch.
class SimilarityBatch {
 public:
  // Profiles must be imputed; pairs name (source, target) codes.
  SimilarityBatch(std::vector<LanguageProfile> profiles,
                  std::vector<std::pair<std::string, std::string>> pairs);

  const std::vector<std::pair<std::string, std::string>>& pairs() const { return pairs_; }
  const LanguageProfile& profile(std::string_view code) const;

  std::array<double, kNumFeatures> raw_cosines(std::string_view a, std::string_view b) const;
  double min(Feature f) const { return min_[static_cast<std::size_t>(f)]; }
  double max(Feature f) const { return max_[static_cast<std::size_t>(f)]; }

  // Per-feature cosine rescaled by the batch min/max to [0, 100] (clamped).
  SimilarityReport similarity(std::string_view a, std::string_view b) const;
  // One report per batch pair, in pair order.
  std::vector<SimilarityReport> all() const;

 private:
  std::vector<LanguageProfile> profiles_;
  std::vector<std::pair<std::string, std::string>> pairs_;
  std::array<double, kNumFeatures> min_{};
  std::array<double, kNumFeatures> max_{};
};

SimilarityReport pairwise_similarity(std::string_view a, std::string_view b, const SimilarityBatch& batch);

// JSON lines {"code", "wiki_size", "features": {"SYN": [...], ...}}, null = missing.
std::vector<LanguageProfile> parse_profiles(std::string_view jsonl);
std::vector<LanguageProfile> load_profiles(const std::filesystem::path& path);

// Whitespace-separated "source target" per line.
std::vector<std::pair<std::string, std::string>> load_pairs(const std::filesystem::path& path);

}  // namespace parc
