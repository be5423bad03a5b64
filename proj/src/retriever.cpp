#include "parc/retriever.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <random>

#include "parc/error.hpp"

namespace parc {

namespace {

struct Scored {
  double sim;
  std::size_t pos;
};

// Strict "ranks before" order: higher similarity, then lower position.
inline bool ranks_before(const Scored& a, const Scored& b) {
  return a.sim > b.sim || (a.sim == b.sim && a.pos < b.pos);
}

inline double dot_clamped(const float* a, const float* b, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t i = 0; i < dim; ++i) acc += static_cast<double>(a[i]) * b[i];
  return std::clamp(acc, -1.0, 1.0);
}

void check_query(std::span<const float> query, const EmbeddingIndex& index, std::size_t k) {
  if (index.empty()) throw DataError("retrieval over an empty index");
  if (query.size() != index.dim()) {
    throw DataError("dimension mismatch: query dim " + std::to_string(query.size()) + ", index dim " +
                    std::to_string(index.dim()));
  }
  if (k == 0) throw ConfigError("k must be at least 1");
}

std::vector<RetrievalHit> to_hits(std::span<const Scored> top, const EmbeddingIndex& index) {
  std::vector<RetrievalHit> hits;
  hits.reserve(top.size());
  for (std::size_t r = 0; r < top.size(); ++r) {
    hits.push_back(RetrievalHit{index.id(top[r].pos), top[r].pos, top[r].sim, r});
  }
  return hits;
}

std::vector<RetrievalHit> scan(std::span<const float> query, const EmbeddingIndex& index, std::size_t k,
                               bool parallel) {
  check_query(query, index, k);
  const std::size_t n = index.size();
  const std::size_t dim = index.dim();
  const float* base = index.data().data();
  const float* q = query.data();
  std::vector<Scored> scored(n);
  const auto rows = static_cast<std::ptrdiff_t>(n);

#pragma omp parallel for schedule(static) if (parallel && n >= 4096)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto row = static_cast<std::size_t>(i);
    scored[row] = Scored{dot_clamped(q, base + row * dim, dim), row};
  }

  const std::size_t take = std::min(k, n);
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    ranks_before);
  return to_hits(std::span(scored).first(take), index);
}

}  // namespace

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw DataError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  return dot_clamped(a.data(), b.data(), a.size());
}

std::vector<RetrievalHit> retrieve_top_k(std::span<const float> query, const EmbeddingIndex& index,
                                         std::size_t k) {
  return scan(query, index, k, /*parallel=*/true);
}

std::vector<std::vector<RetrievalHit>> retrieve_batch(const EmbeddingIndex& queries,
                                                      const EmbeddingIndex& index, std::size_t k) {
  if (queries.dim() != index.dim() && !queries.empty()) {
    throw DataError("dimension mismatch: query dim " + std::to_string(queries.dim()) + ", index dim " +
                    std::to_string(index.dim()));
  }
  std::vector<std::vector<RetrievalHit>> out(queries.size());
  if (queries.empty()) return out;
  check_query(queries.row(0), index, k);
  const auto count = static_cast<std::ptrdiff_t>(queries.size());

#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto qi = static_cast<std::size_t>(i);
    out[qi] = scan(queries.row(qi), index, k, /*parallel=*/false);
  }
  return out;
}

std::vector<RetrievalHit> random_retrieve(std::span<const float> query, const EmbeddingIndex& index,
                                          std::size_t k, std::uint64_t seed) {
  check_query(query, index, k);
  const std::size_t n = index.size();
  if (k > n) {
    throw ConfigError("random retrieval of " + std::to_string(k) + " rows from an index of " +
                      std::to_string(n));
  }
  std::mt19937_64 rng(seed);
  // Unbiased bounded draw by rejection; mt19937_64's output sequence is fixed
  // by the standard, so draws are reproducible across platforms.
  auto bounded = [&rng](std::uint64_t range) {
    const std::uint64_t threshold = (0 - range) % range;
    while (true) {
      const std::uint64_t r = rng();
      if (r >= threshold) return r % range;
    }
  };
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<RetrievalHit> hits;
  hits.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(bounded(n - i));
    std::swap(order[i], order[j]);
    const std::size_t pos = order[i];
    hits.push_back(RetrievalHit{index.id(pos), pos, cosine(query, index.row(pos)), i});
  }
  return hits;
}

namespace reference {

std::vector<RetrievalHit> retrieve_top_k(std::span<const float> query, const EmbeddingIndex& index,
                                         std::size_t k) {
  check_query(query, index, k);
  const std::size_t take = std::min(k, index.size());
  // Max-heap on "ranks after", so the top is the worst kept candidate.
  auto worse_on_top = [](const Scored& a, const Scored& b) { return ranks_before(a, b); };
  std::priority_queue<Scored, std::vector<Scored>, decltype(worse_on_top)> heap(worse_on_top);
  for (std::size_t row = 0; row < index.size(); ++row) {
    const Scored s{dot_clamped(query.data(), index.row(row).data(), index.dim()), row};
    if (heap.size() < take) {
      heap.push(s);
    } else if (ranks_before(s, heap.top())) {
      heap.pop();
      heap.push(s);
    }
  }
  std::vector<Scored> top(heap.size());
  for (auto it = top.rbegin(); it != top.rend(); ++it) {
    *it = heap.top();
    heap.pop();
  }
  return to_hits(top, index);
}

}  // namespace reference

}  // namespace parc
