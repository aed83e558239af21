#include <benchmark/benchmark.h>

#include "civgraph/rng.hpp"
#include "civgraph/train/metrics.hpp"

namespace {

using namespace civgraph;

void BM_AucRoc(benchmark::State& state) {
  CounterRng rng(3);
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Eigen::VectorXd s(n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s(i) = static_cast<double>(rng.below(1000)) / 1000.0;
    y(i) = static_cast<double>(i % 2);
  }
  for (auto _ : state) benchmark::DoNotOptimize(train::auc_roc(s, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AucRoc)->Range(1 << 10, 1 << 18)->Complexity(benchmark::oNLogN);

}  // namespace
