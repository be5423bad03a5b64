#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "parc/embedding.hpp"
#include "parc/retriever.hpp"

namespace {

// Synthetic unit-norm pool, same shape as a mid-sized training set.
struct Pool {
  parc::EmbeddingIndex index;
  std::vector<float> query;
};

const Pool& pool(std::size_t n, std::size_t dim) {
  static std::map<std::pair<std::size_t, std::size_t>, Pool> cache;
  auto it = cache.find({n, dim});
  if (it != cache.end()) return it->second;
  std::mt19937 rng(7);
  std::normal_distribution<float> g;
  std::vector<std::string> ids(n);
  std::vector<float> data(n * dim);
  for (std::size_t i = 0; i < n; ++i) ids[i] = "r" + std::to_string(i);
  for (auto& v : data) v = g(rng);
  std::vector<float> q(dim);
  for (auto& v : q) v = g(rng);
  return cache.emplace(std::pair{n, dim}, Pool{parc::build_index(std::move(ids), data, dim), std::move(q)})
      .first->second;
}

void BM_Parallel(benchmark::State& state) {
  const auto& p = pool(static_cast<std::size_t>(state.range(0)), 768);
  for (auto _ : state) benchmark::DoNotOptimize(parc::retrieve_top_k(p.query, p.index, 10));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Reference(benchmark::State& state) {
  const auto& p = pool(static_cast<std::size_t>(state.range(0)), 768);
  for (auto _ : state) benchmark::DoNotOptimize(parc::reference::retrieve_top_k(p.query, p.index, 10));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Parallel)->Arg(1000)->Arg(10000)->Arg(50000);
BENCHMARK(BM_Reference)->Arg(1000)->Arg(10000)->Arg(50000);

BENCHMARK_MAIN();
