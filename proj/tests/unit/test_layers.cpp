#include <gtest/gtest.h>

#include <cmath>

#include "civgraph/error.hpp"
#include "civgraph/nn/gradcheck.hpp"
#include "civgraph/nn/layers.hpp"
#include "civgraph/rng.hpp"

namespace civgraph::nn {
namespace {

Matrix random_matrix(Index rows, Index cols, CounterRng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = 2.0 * rng.uniform() - 1.0;
  return m;
}

TEST(Linear, IdentityWeightsPassInputThrough) {
  CounterRng rng(1);
  Parameter w("w", 3, 3);
  w.value.setIdentity();
  Parameter b("b", 1, 3);
  const Matrix x = random_matrix(4, 3, rng);
  EXPECT_EQ(linear(x, w, &b), x);
}

TEST(Linear, HandComputedTwoByTwo) {
  Parameter w("w", 2, 2);
  w.value << 1, 2, 3, 4;
  Parameter b("b", 1, 2);
  b.value << 0.5, -1;
  Matrix x(1, 2);
  x << 1, -1;
  const Matrix y = linear(x, w, &b);
  EXPECT_DOUBLE_EQ(y(0, 0), 1 - 3 + 0.5);
  EXPECT_DOUBLE_EQ(y(0, 1), 2 - 4 - 1);

  Matrix dy(1, 2);
  dy << 1, 2;
  const Matrix dx = linear_backward(x, dy, w, &b);
  EXPECT_DOUBLE_EQ(dx(0, 0), 1 * 1 + 2 * 2);
  EXPECT_DOUBLE_EQ(dx(0, 1), 3 * 1 + 4 * 2);
  EXPECT_DOUBLE_EQ(w.grad(0, 0), 1);
  EXPECT_DOUBLE_EQ(w.grad(0, 1), 2);
  EXPECT_DOUBLE_EQ(w.grad(1, 0), -1);
  EXPECT_DOUBLE_EQ(w.grad(1, 1), -2);
  EXPECT_DOUBLE_EQ(b.grad(0, 0), 1);
  EXPECT_DOUBLE_EQ(b.grad(0, 1), 2);
}

TEST(Linear, ShapeMismatchIsError) {
  Parameter w("w", 3, 2);
  EXPECT_THROW(linear(Matrix::Zero(2, 4), w, nullptr), Error);
}

TEST(Linear, GradientMatchesFiniteDifferences) {
  CounterRng rng(2);
  Linear layer("lin", 5, 3, true, rng);
  layer.bias.value = random_matrix(1, 3, rng);
  Matrix x = random_matrix(4, 5, rng);
  const Matrix r = random_matrix(4, 3, rng);
  auto loss = [&] { return (layer.forward(x).array() * r.array()).sum(); };
  loss();
  const Matrix dx = layer.backward(r);
  const Matrix dw = layer.weight.grad;
  EXPECT_LT(check_gradient("x", x, dx, loss).max_rel_error, 1e-6);
  EXPECT_LT(check_gradient("w", layer.weight.value, dw, loss).max_rel_error, 1e-6);
}

TEST(Activations, ReluAndSigmoidValues) {
  Matrix x(1, 3);
  x << -2, 0, 3;
  const Matrix r = relu(x);
  EXPECT_EQ(r(0, 0), 0);
  EXPECT_EQ(r(0, 2), 3);
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(800.0), 1.0, 0);
  EXPECT_NEAR(sigmoid(-800.0), 0.0, 1e-300);
  EXPECT_TRUE(std::isfinite(sigmoid(-800.0)));
  const Matrix lr = leaky_relu(x, 0.2);
  EXPECT_DOUBLE_EQ(lr(0, 0), -0.4);
}

TEST(Activations, GradientsMatchFiniteDifferences) {
  CounterRng rng(3);
  for (auto a : {Activation::tanh, Activation::relu, Activation::leaky_relu, Activation::identity}) {
    Matrix x = random_matrix(6, 4, rng);
    const Matrix r = random_matrix(6, 4, rng);
    auto loss = [&] {
      kink_probe::record(x);
      return (activate(a, x, 0.1).array() * r.array()).sum();
    };
    const Matrix y = activate(a, x, 0.1);
    const Matrix dx = activate_backward(a, x, y, r, 0.1);
    EXPECT_LT(check_gradient(std::string(to_string(a)), x, dx, loss).max_rel_error, 1e-5) << to_string(a);
  }
  Matrix x = random_matrix(3, 3, rng);
  const Matrix r = random_matrix(3, 3, rng);
  auto loss = [&] { return (sigmoid(x).array() * r.array()).sum(); };
  EXPECT_LT(check_gradient("sigmoid", x, sigmoid_backward(sigmoid(x), r), loss).max_rel_error, 1e-5);
}

TEST(Activations, NamesRoundTrip) {
  for (auto a : {Activation::tanh, Activation::relu, Activation::leaky_relu, Activation::identity}) {
    EXPECT_EQ(parse_activation(to_string(a)), a);
  }
  EXPECT_THROW(parse_activation("gelu"), Error);
}

TEST(BatchNorm, TrainModeStandardizesEachFeature) {
  CounterRng rng(4);
  BatchNorm bn("bn", 5, 0.1);
  const Matrix x = (random_matrix(40, 5, rng).array() * 3.0 + 2.0).matrix();
  const Matrix y = bn.forward(x, Mode::train);
  for (Index c = 0; c < 5; ++c) {
    const double mean = y.col(c).mean();
    const double var = (y.col(c).array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 1e-5);
    EXPECT_NEAR(var, 1.0, 1e-5 + 1e-5 * 10);
  }
}

TEST(BatchNorm, ConstantColumnGivesShift) {
  BatchNorm bn("bn", 2, 0.1);
  bn.beta.value << 0.25, -0.5;
  Matrix x(3, 2);
  x << 4, 1, 4, 2, 4, 3;
  const Matrix y = bn.forward(x, Mode::train);
  for (Index i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(y(i, 0), 0.25);
}

TEST(BatchNorm, EvalWithDefaultStatisticsIsNearIdentity) {
  CounterRng rng(5);
  BatchNorm bn("bn", 4, 0.1);
  const Matrix x = random_matrix(6, 4, rng);
  EXPECT_TRUE(bn.forward(x, Mode::eval).isApprox(x / std::sqrt(1.0 + 1e-5), 1e-12));
}

TEST(BatchNorm, RunningStatisticsFollowMomentum) {
  BatchNorm bn("bn", 1, 0.5);
  Matrix x(2, 1);
  x << 1, 3;
  bn.forward(x, Mode::train);
  EXPECT_FLOAT_EQ(static_cast<float>(bn.running_mean(0, 0)), 1.0f);
  EXPECT_FLOAT_EQ(static_cast<float>(bn.running_var(0, 0)), 0.5f + 0.5f * 2.0f);
}

TEST(BatchNorm, SingleRowTrainIsError) {
  BatchNorm bn("bn", 3, 0.1);
  EXPECT_THROW(bn.forward(Matrix::Ones(1, 3), Mode::train), Error);
}

TEST(Dropout, IdentityCases) {
  CounterRng rng(6);
  const Matrix x = random_matrix(5, 5, rng);
  Dropout zero(0.0, 1);
  EXPECT_EQ(zero.forward(x, {Mode::train, 7}), x);
  Dropout half(0.5, 1);
  EXPECT_EQ(half.forward(x, {Mode::eval, 7}), x);
}

TEST(Dropout, LawOfLargeNumbers) {
  Dropout d(0.5, 3);
  const Matrix x = Matrix::Ones(1000, 1000);
  const Matrix y = d.forward(x, {Mode::train, 11});
  const double survivors = (y.array() != 0.0).cast<double>().mean();
  EXPECT_NEAR(survivors, 0.5, 0.01);
  EXPECT_NEAR(y.mean(), 1.0, 0.01);
}

TEST(Dropout, MaskIsPureFunctionOfKeyAndSalt) {
  const Matrix x = Matrix::Ones(20, 20);
  Dropout a(0.3, 5);
  Dropout b(0.3, 5);
  Dropout c(0.3, 6);
  EXPECT_EQ(a.forward(x, {Mode::train, 9}), b.forward(x, {Mode::train, 9}));
  EXPECT_NE(a.forward(x, {Mode::train, 9}), c.forward(x, {Mode::train, 9}));
  EXPECT_NE(a.forward(x, {Mode::train, 9}), a.forward(x, {Mode::train, 10}));
  EXPECT_THROW(Dropout(1.0, 0), Error);
}

TEST(Bce, HalfGivesLnTwo) {
  const Vector y_hat = Vector::Constant(8, 0.5);
  Vector y(8);
  y << 1, 0, 1, 0, 1, 1, 0, 0;
  EXPECT_NEAR(bce_loss(y_hat, y), std::log(2.0), 1e-15);
}

TEST(Bce, PerfectPredictionsHitClampFloor) {
  Vector y(4);
  y << 1, 0, 0, 1;
  EXPECT_NEAR(bce_loss(y, y), -std::log(1.0 - kBceEpsilon), 1e-18);
  EXPECT_TRUE(bce_loss_backward(y, y).allFinite());
}

TEST(Bce, GradientMatchesFiniteDifferencesAndLengthChecked) {
  CounterRng rng(7);
  Vector y_hat(10);
  Vector y(10);
  for (Index i = 0; i < 10; ++i) {
    y_hat(i) = 0.05 + 0.9 * rng.uniform();
    y(i) = static_cast<double>(rng.below(2));
  }
  Matrix m = y_hat.transpose();
  auto loss = [&] { return bce_loss(m.row(0).transpose(), y); };
  const Matrix g = bce_loss_backward(y_hat, y).transpose();
  EXPECT_LT(check_gradient("bce", m, g, loss, {.step = 1e-6}).max_rel_error, 1e-5);
  EXPECT_THROW(bce_loss(Vector::Zero(3), Vector::Zero(4)), Error);
}

TEST(GlorotUniform, StaysInsideLimit) {
  CounterRng rng(8);
  Matrix w(30, 20);
  glorot_uniform(w, 30, 20, rng);
  const double limit = std::sqrt(6.0 / 50.0);
  EXPECT_LE(w.cwiseAbs().maxCoeff(), limit);
  EXPECT_GT(w.cwiseAbs().maxCoeff(), 0.5 * limit);
}

}  // namespace
}  // namespace civgraph::nn
