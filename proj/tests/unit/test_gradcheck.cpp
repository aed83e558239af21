#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "civgraph/model/gradcheck_suite.hpp"
#include "civgraph/nn/gradcheck.hpp"
#include "civgraph/nn/layers.hpp"

namespace civgraph::nn {
namespace {

TEST(RelativeError, FloorAppliesBelowMagnitude) {
  EXPECT_NEAR(relative_error(1.0, 1.1, 1e-3), 0.1 / 1.1, 1e-15);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 1e-6, 1e-3), 1e-3);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 2.0, 1e-3), 0.0);
}

TEST(CheckGradient, DetectsWrongAnalyticGradient) {
  Matrix x(1, 3);
  x << 0.5, -1.0, 2.0;
  auto loss = [&] { return x.array().square().sum(); };
  const Matrix right = 2.0 * x;
  EXPECT_LT(check_gradient("x", x, right, loss).max_rel_error, 1e-8);
  Matrix wrong = right;
  wrong(0, 1) *= 1.01;
  const auto stats = check_gradient("x", x, wrong, loss);
  EXPECT_GT(stats.max_rel_error, 1e-3);
  EXPECT_EQ(stats.worst, "x[1]");
}

TEST(CheckGradient, RestoresTarget) {
  Matrix x(2, 2);
  x << 1, 2, 3, 4;
  const Matrix before = x;
  check_gradient("x", x, 2.0 * x, [&] { return x.array().square().sum(); });
  EXPECT_EQ(x, before);
}

TEST(CheckGradient, ShrinksStepAcrossKink) {
  Matrix x(1, 1);
  x << 5e-5;  // within the default step of the relu kink
  auto loss = [&] {
    kink_probe::record(x);
    return relu(x).sum();
  };
  const auto stats = check_gradient("x", x, Matrix::Ones(1, 1), loss);
  EXPECT_LT(stats.max_rel_error, 1e-8);
  EXPECT_EQ(stats.reduced_steps, 1u);
}

TEST(GradcheckSuite, EveryOpPassesAndNamesAreUnique) {
  const auto rows = model::run_gradcheck_suite();
  std::set<std::string> names;
  for (const auto& row : rows) {
    EXPECT_TRUE(row.passed) << row.op << " " << row.stats.max_rel_error << " at " << row.stats.worst;
    EXPECT_GT(row.stats.checked, 0u) << row.op;
    EXPECT_TRUE(names.insert(row.op).second) << row.op;
  }
  for (const char* op : {"linear", "gat_concat", "batch_norm_train", "fuse", "hybrid_model"}) {
    EXPECT_TRUE(names.count(op)) << op;
  }
}

TEST(GradcheckSuite, PassesAcrossSeeds) {
  for (std::uint64_t seed : {2u, 3u}) {
    for (const auto& row : model::run_gradcheck_suite({.seed = seed})) EXPECT_TRUE(row.passed) << seed << " " << row.op;
  }
}

}  // namespace
}  // namespace civgraph::nn
