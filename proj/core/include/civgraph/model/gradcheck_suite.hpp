#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "civgraph/graph/comment_graph.hpp"
#include "civgraph/nn/gradcheck.hpp"
#include "civgraph/rng.hpp"

namespace civgraph::model {

struct GradcheckSuiteOptions {
  std::uint64_t seed = 1;
  double tolerance = 1e-4;  // maximum relative error per op
  nn::GradcheckOptions check;
};

struct GradcheckRow {
  std::string op;
  nn::GradcheckStats stats;
  bool passed = false;
};

/// Random connected graph on n nodes in finalized CSR form, with edge
/// weights drawn from [0.5, 1).
graph::CommentGraph random_test_graph(std::uint32_t n, double edge_probability, CounterRng& rng);

/// Central finite-difference checks of every differentiable op and of the
/// composed model on tiny random instances. Each op is probed through the
/// scalar sum(out * R) with a random R, or through its own loss.
std::vector<GradcheckRow> run_gradcheck_suite(const GradcheckSuiteOptions& options = {});

}  // namespace civgraph::model
