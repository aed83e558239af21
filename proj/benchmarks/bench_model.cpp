#include <benchmark/benchmark.h>

#include "civgraph/model/gradcheck_suite.hpp"
#include "civgraph/model/hybrid_model.hpp"
#include "civgraph/nn/gat.hpp"
#include "civgraph/rng.hpp"

namespace {

using namespace civgraph;

nn::Matrix random_matrix(nn::Index rows, nn::Index cols, CounterRng& rng) {
  nn::Matrix m(rows, cols);
  for (nn::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform() - 0.5;
  return m;
}

void BM_GatForwardBackward(benchmark::State& state) {
  CounterRng rng(1);
  const auto n = static_cast<std::uint32_t>(state.range(0));
  const auto g = model::random_test_graph(n, 8.0 / n, rng);
  nn::GatLayer gat("gat", {.in_dim = 768, .head_dim = 256, .heads = 3}, rng);
  const nn::Matrix h = random_matrix(n, 768, rng);
  const nn::Matrix d = random_matrix(n, 768, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gat.forward(h, g));
    benchmark::DoNotOptimize(gat.backward(d));
  }
}
BENCHMARK(BM_GatForwardBackward)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_HybridTrainStep(benchmark::State& state) {
  CounterRng rng(2);
  const auto n = static_cast<std::uint32_t>(state.range(0));
  const auto g = model::random_test_graph(n, 8.0 / n, rng);
  model::ModelConfig cfg;
  model::HybridModel m(cfg);
  const nn::Matrix x = random_matrix(n, cfg.input_dim, rng);
  std::uint64_t step = 0;
  for (auto _ : state) {
    m.zero_grad();
    const auto out = m.forward(g, x, {nn::Mode::train, ++step});
    m.backward(out.y_hat);
  }
}
BENCHMARK(BM_HybridTrainStep)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
