#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "civgraph/error.hpp"
#include "civgraph/nn/adam.hpp"
#include "oracles.hpp"

namespace civgraph::nn {
namespace {

TEST(Adam, ZeroGradientZeroMomentsLeavesValueWithoutDecay) {
  Parameter p("p", 2, 2);
  p.value << 1, -2, 3, 0.5;
  const Matrix before = p.value;
  ParameterRefs refs{&p};
  adam_step(refs, {.weight_decay = 0.0}, 1);
  EXPECT_EQ(p.value, before);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter p("p", 1, 3);
  p.binary32_storage = false;
  p.grad << 0.3, -4.0, 1e-3;
  ParameterRefs refs{&p};
  const AdamConfig cfg{.lr = 0.01, .weight_decay = 0.0};
  adam_step(refs, cfg, 1);
  for (Index i = 0; i < 3; ++i) {
    const double g = std::abs(p.grad(0, i));
    EXPECT_NEAR(std::abs(p.value(0, i)), cfg.lr * g / (g + cfg.eps), 1e-15);
    EXPECT_LT(p.value(0, i) * p.grad(0, i), 0.0);
  }
}

TEST(Adam, TenStepsOnSquareMatchReference) {
  for (double decay : {0.0, 0.01}) {
    Parameter p("w", 1, 1);
    p.binary32_storage = false;
    p.value(0, 0) = 1.0;
    testing::ReferenceAdam ref{.lr = 0.05, .weight_decay = decay};
    double w = 1.0;
    ParameterRefs refs{&p};
    for (std::uint64_t t = 1; t <= 10; ++t) {
      p.grad(0, 0) = 2.0 * p.value(0, 0);
      adam_step(refs, {.lr = 0.05, .weight_decay = decay}, t);
      w = ref.step(w, 2.0 * w);
      EXPECT_NEAR(p.value(0, 0), w, 1e-10) << "step " << t;
    }
  }
}

TEST(Adam, ZeroLearningRateIsNoOp) {
  Parameter p("p", 2, 3);
  p.value.setConstant(0.75);
  p.grad.setConstant(2.0);
  const Matrix before = p.value;
  ParameterRefs refs{&p};
  adam_step(refs, {.lr = 0.0}, 1);
  EXPECT_EQ(p.value, before);
}

TEST(Adam, BinaryStorageKeepsValuesFloatRepresentable) {
  Parameter p("p", 1, 4);
  p.value << 0.1, 0.2, 0.3, 0.4;
  p.normalize_storage();
  p.grad << 1, 2, 3, 4;
  ParameterRefs refs{&p};
  adam_step(refs, {}, 1);
  for (Index i = 0; i < 4; ++i) EXPECT_EQ(p.value(0, i), static_cast<double>(static_cast<float>(p.value(0, i))));
}

TEST(Adam, NonFiniteGradientNamesParameterAndUpdatesNothing) {
  Parameter a("layer.a", 1, 1);
  Parameter b("layer.b", 1, 1);
  a.grad(0, 0) = 1.0;
  b.grad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  ParameterRefs refs{&a, &b};
  try {
    adam_step(refs, {}, 1);
    FAIL() << "expected error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
    EXPECT_NE(std::string(e.what()).find("layer.b"), std::string::npos);
  }
  EXPECT_EQ(a.value(0, 0), 0.0);
  EXPECT_THROW(adam_step(refs, {}, 0), Error);
}

}  // namespace
}  // namespace civgraph::nn
