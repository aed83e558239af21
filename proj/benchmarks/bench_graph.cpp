#include <benchmark/benchmark.h>

#include <cmath>

#include "civgraph/data/embeddings.hpp"
#include "civgraph/graph/builder.hpp"
#include "civgraph/rng.hpp"

namespace {

using namespace civgraph;

data::EmbeddingMatrix random_unit_rows(std::uint32_t n, std::uint32_t dim) {
  CounterRng rng(42);
  data::EmbeddingMatrix m(n, dim);
  for (auto& v : m.values) v = static_cast<float>(rng.uniform() - 0.5);
  for (std::uint32_t i = 0; i < n; ++i) m.row_ids[i] = i;
  return data::l2_normalize(m);
}

void BM_BuildGraph(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  const auto m = random_unit_rows(n, 768);
  graph::GraphConfig cfg;
  cfg.tau = 0.9;
  cfg.k_min = 5;
  cfg.threads = static_cast<std::uint32_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(graph::build_graph(m, cfg));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildGraph)->Args({500, 1})->Args({1000, 1})->Args({2000, 1})->Args({2000, 4})->Unit(benchmark::kMillisecond);

void BM_SimilarityBlock(benchmark::State& state) {
  const auto m = random_unit_rows(1024, 768);
  const auto rows = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(graph::pairwise_similarity_block(m, 0, rows));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * rows * m.n_rows));
}
BENCHMARK(BM_SimilarityBlock)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
