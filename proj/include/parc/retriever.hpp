#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "parc/embedding.hpp"

namespace parc {

struct RetrievalHit {
  std::string sample_id;
  std::size_t position = 0;  // row in the index
  double similarity = 0.0;
  std::size_t rank = 0;

  friend bool operator==(const RetrievalHit&, const RetrievalHit&) = default;
};

// Dot product of two unit vectors accumulated in double, clamped to [-1, 1].
double cosine(std::span<const float> a, std::span<const float> b);

// Exact top-k by cosine: similarity descending, ties by index position
// ascending; returns min(k, |index|) hits. The row scan is OpenMP-parallel.
std::vector<RetrievalHit> retrieve_top_k(std::span<const float> query, const EmbeddingIndex& index,
                                         std::size_t k);

// One top-k list per query row; parallel across queries.
std::vector<std::vector<RetrievalHit>> retrieve_batch(const EmbeddingIndex& queries,
                                                      const EmbeddingIndex& index, std::size_t k);

// k distinct rows drawn uniformly without replacement, reproducible from
// `seed`. Similarities are the true cosines against `query`; rank is draw order.
std::vector<RetrievalHit> random_retrieve(std::span<const float> query, const EmbeddingIndex& index,
                                          std::size_t k, std::uint64_t seed);

namespace reference {

// Single-threaded bounded-heap scan. Kept as the comparison baseline for the
// parallel kernel in tests and benchmarks.
std::vector<RetrievalHit> retrieve_top_k(std::span<const float> query, const EmbeddingIndex& index,
                                         std::size_t k);

}  // namespace reference

}  // namespace parc
