#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "civgraph/error.hpp"
#include "civgraph/graph/builder.hpp"
#include "civgraph/model/gradcheck_suite.hpp"
#include "civgraph/model/hybrid_model.hpp"
#include "civgraph/rng.hpp"

namespace civgraph::model {
namespace {

nn::Parameter& param(HybridModel& m, const std::string& name) {
  for (auto* p : m.parameters()) {
    if (p->name == name) return *p;
  }
  throw std::runtime_error("no parameter " + name);
}

Matrix random_matrix(nn::Index rows, nn::Index cols, CounterRng& rng) {
  Matrix m(rows, cols);
  for (nn::Index i = 0; i < m.size(); ++i) m.data()[i] = 2.0 * rng.uniform() - 1.0;
  return m;
}

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.input_dim = 6;
  cfg.hidden_dim = 4;
  cfg.gnn_layers = 3;
  cfg.heads = 2;
  cfg.mlp_layers = 2;
  cfg.classifier_hidden = 5;
  cfg.attention_hidden = 3;
  cfg.dropout = 0.25;
  cfg.seed = 17;
  return cfg;
}

double leaky(double v, double slope) { return v > 0 ? v : slope * v; }

TEST(HybridModel, ThreeNodeHandTrace) {
  ModelConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_dim = 2;
  cfg.gnn_layers = 1;
  cfg.heads = 1;
  cfg.mlp_layers = 1;
  cfg.classifier_hidden = 2;
  cfg.attention_hidden = 2;
  cfg.dropout = 0.0;
  cfg.batch_norm = false;
  cfg.batch_norm_final = false;
  cfg.residual = false;
  HybridModel m(cfg);

  param(m, "gnn.0.gat.weight").value << 1.0, 0.5, -0.5, 1.0;
  param(m, "gnn.0.gat.att_src").value << 0.3, -0.2;
  param(m, "gnn.0.gat.att_dst").value << 0.1, 0.4;
  param(m, "gnn.0.gat.edge_beta").value << 0.5;
  param(m, "gnn.0.gat.bias").value << 0.05, -0.05;
  param(m, "mlp.0.weight").value << 0.2, -0.3, 0.4, 0.1;
  param(m, "mlp.0.bias").value << 0.0, 0.1;
  param(m, "fusion.hidden.weight").value << 0.1, -0.1, 0.2, 0.0, 0.0, 0.3, -0.2, 0.1;
  param(m, "fusion.hidden.bias").value << 0.0, 0.05;
  param(m, "fusion.scorer.weight").value << 0.5, -0.5, 0.25, 0.75;
  param(m, "fusion.scorer.bias").value << 0.1, -0.1;
  param(m, "classifier.0.weight").value << 1.0, -1.0, 0.5, 0.5;
  param(m, "classifier.0.bias").value << 0.0, 0.2;
  param(m, "classifier.1.weight").value << 0.8, -0.6;
  param(m, "classifier.1.bias").value << 0.1;

  // path 0 - 1 - 2
  const auto g = graph::finalize_graph(std::vector<graph::Edge>{{0, 1, 0.95, false}, {1, 2, 0.5, true}}, 3);
  Matrix x(3, 2);
  x << 1.0, 0.0, 0.5, 0.5, -1.0, 2.0;

  const double W[2][2] = {{1.0, 0.5}, {-0.5, 1.0}};
  double z[3][2];
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 2; ++c) z[i][c] = x(i, 0) * W[0][c] + x(i, 1) * W[1][c];
  }
  const std::vector<std::vector<std::pair<int, double>>> nbrs = {
      {{0, 1.0}, {1, double(0.95f)}}, {{0, double(0.95f)}, {1, 1.0}, {2, 0.5}}, {{1, 0.5}, {2, 1.0}}};
  double h_gnn[3][2];
  for (int i = 0; i < 3; ++i) {
    std::vector<double> e;
    for (auto [j, w] : nbrs[i]) {
      const double s = 0.3 * z[i][0] - 0.2 * z[i][1] + 0.1 * z[j][0] + 0.4 * z[j][1];
      e.push_back(leaky(s, cfg.negative_slope) + 0.5 * w);
    }
    double denom = 0;
    for (double v : e) denom += std::exp(v);
    for (int c = 0; c < 2; ++c) {
      double acc = 0;
      for (std::size_t k = 0; k < e.size(); ++k) acc += std::exp(e[k]) / denom * z[nbrs[i][k].first][c];
      h_gnn[i][c] = acc + (c == 0 ? 0.05 : -0.05);
    }
  }

  const auto out = m.forward(g, x, {nn::Mode::eval, 0});
  for (int i = 0; i < 3; ++i) {
    const double h_mlp[2] = {x(i, 0) * 0.2 + x(i, 1) * 0.4, x(i, 0) * -0.3 + x(i, 1) * 0.1 + 0.1};
    const double cat[4] = {h_gnn[i][0], h_gnn[i][1], h_mlp[0], h_mlp[1]};
    const double wh[4][2] = {{0.1, -0.1}, {0.2, 0.0}, {0.0, 0.3}, {-0.2, 0.1}};
    double a[2] = {0.0, 0.05};
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 2; ++c) a[c] += cat[r] * wh[r][c];
    }
    a[0] = std::tanh(a[0]);
    a[1] = std::tanh(a[1]);
    const double l0 = a[0] * 0.5 + a[1] * 0.25 + 0.1;
    const double l1 = a[0] * -0.5 + a[1] * 0.75 - 0.1;
    const double alpha = std::exp(l0) / (std::exp(l0) + std::exp(l1));
    double fused[2];
    for (int c = 0; c < 2; ++c) fused[c] = alpha * h_gnn[i][c] + (1 - alpha) * h_mlp[c];
    const double c0 = std::max(0.0, fused[0] * 1.0 + fused[1] * 0.5);
    const double c1 = std::max(0.0, fused[0] * -1.0 + fused[1] * 0.5 + 0.2);
    const double y_hat = 1.0 / (1.0 + std::exp(-(0.8 * c0 - 0.6 * c1 + 0.1)));

    EXPECT_NEAR(m.last_h_gnn()(i, 0), h_gnn[i][0], 1e-12);
    EXPECT_NEAR(m.last_h_gnn()(i, 1), h_gnn[i][1], 1e-12);
    EXPECT_NEAR(out.fusion.alpha_gnn(i), alpha, 1e-12);
    EXPECT_NEAR(out.y_hat(i), y_hat, 1e-12);
  }
}

TEST(HybridModel, EvalModeIsDeterministic) {
  CounterRng rng(1);
  const auto g = random_test_graph(10, 0.3, rng);
  HybridModel m(small_config());
  const Matrix x = random_matrix(10, 6, rng);
  const auto a = m.forward(g, x, {nn::Mode::eval, 1});
  const auto b = m.forward(g, x, {nn::Mode::eval, 99});
  EXPECT_EQ(a.y_hat, b.y_hat);
  EXPECT_EQ(a.fusion.alpha_gnn, b.fusion.alpha_gnn);
}

TEST(HybridModel, SameSeedSameParameters) {
  HybridModel a(small_config());
  HybridModel b(small_config());
  auto pa = a.parameters();
  auto pb = b.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->name, pb[i]->name);
    EXPECT_EQ(pa[i]->value, pb[i]->value);
  }
  auto other = small_config();
  other.seed = 18;
  HybridModel c(other);
  EXPECT_NE(c.parameters()[0]->value, pa[0]->value);
}

TEST(HybridModel, DefaultWidths) {
  ModelConfig cfg;
  cfg.input_dim = 8;
  HybridModel m(cfg);
  EXPECT_EQ(m.gnn().depth(), 3u);
  EXPECT_EQ(m.gnn().gat(0).config().out_dim(), 768);
  EXPECT_EQ(m.gnn().gat(2).config().out_dim(), 256);
  EXPECT_EQ(m.gnn().gat(2).config().heads, 1);
  EXPECT_EQ(m.fusion().hidden().in_dim(), 512);
  EXPECT_EQ(m.fusion().hidden().out_dim(), 128);
  EXPECT_EQ(m.fusion().scorer().out_dim(), 2);
  EXPECT_EQ(m.classifier().first().out_dim(), 128);
  EXPECT_EQ(m.classifier().last().out_dim(), 1);
}

TEST(Fusion, ZeroScorerGivesEqualWeights) {
  CounterRng rng(2);
  HybridModel m(small_config());
  m.fusion().scorer().weight.value.setZero();
  m.fusion().scorer().bias.value.setZero();
  const auto g = random_test_graph(7, 0.3, rng);
  const auto out = m.forward(g, random_matrix(7, 6, rng), {nn::Mode::eval, 0});
  for (nn::Index i = 0; i < 7; ++i) {
    EXPECT_DOUBLE_EQ(out.fusion.alpha_gnn(i), 0.5);
    EXPECT_TRUE(out.fusion.h_fused.row(i).isApprox(0.5 * (m.last_h_gnn().row(i) + m.last_h_mlp().row(i)), 1e-14));
  }
}

TEST(Fusion, ConvexCombinationPerNode) {
  CounterRng rng(3);
  HybridModel m(small_config());
  const auto g = random_test_graph(12, 0.3, rng);
  const auto out = m.forward(g, random_matrix(12, 6, rng), {nn::Mode::train, 5});
  for (nn::Index i = 0; i < 12; ++i) {
    const double a = out.fusion.alpha_gnn(i);
    EXPECT_GT(a, 0.0);
    EXPECT_LT(a, 1.0);
    EXPECT_NEAR(a + out.fusion.alpha_mlp(i), 1.0, 1e-15);
    for (nn::Index c = 0; c < 4; ++c) {
      const double lo = std::min(m.last_h_gnn()(i, c), m.last_h_mlp()(i, c));
      const double hi = std::max(m.last_h_gnn()(i, c), m.last_h_mlp()(i, c));
      EXPECT_GE(out.fusion.h_fused(i, c), lo - 1e-12);
      EXPECT_LE(out.fusion.h_fused(i, c), hi + 1e-12);
    }
  }
}

TEST(Fusion, OverrideEndpointsAndNoScorerGradient) {
  CounterRng rng(4);
  HybridModel m(small_config());
  const auto g = random_test_graph(9, 0.3, rng);
  const Matrix x = random_matrix(9, 6, rng);
  m.fusion().set_override(1.0);
  auto out = m.forward(g, x, {nn::Mode::eval, 0});
  EXPECT_EQ(out.fusion.h_fused, m.last_h_gnn());
  m.fusion().set_override(0.0);
  out = m.forward(g, x, {nn::Mode::train, 3});
  EXPECT_EQ(out.fusion.h_fused, m.last_h_mlp());
  m.zero_grad();
  m.backward(Vector::Ones(9));
  EXPECT_TRUE(m.fusion().scorer().weight.grad.isZero(0));
  EXPECT_TRUE(m.fusion().hidden().weight.grad.isZero(0));
  EXPECT_TRUE(m.gnn().gat(0).weight.grad.isZero(0));
  EXPECT_FALSE(m.classifier().first().weight.grad.isZero(0));
}

TEST(Classifier, ZeroWeightsGiveOneHalf) {
  CounterRng rng(5);
  HybridModel m(small_config());
  m.classifier().last().weight.value.setZero();
  m.classifier().last().bias.value.setZero();
  const auto g = random_test_graph(6, 0.3, rng);
  const auto out = m.forward(g, random_matrix(6, 6, rng), {nn::Mode::train, 2});
  for (nn::Index i = 0; i < 6; ++i) EXPECT_EQ(out.y_hat(i), 0.5);
}

TEST(MlpBranch, IdenticalRowsGiveIdenticalOutputs) {
  CounterRng rng(6);
  HybridModel m(small_config());
  Matrix x = random_matrix(5, 6, rng);
  x.row(3) = x.row(1);
  const auto g = random_test_graph(5, 0.3, rng);
  m.forward(g, x, {nn::Mode::eval, 0});
  EXPECT_EQ(m.last_h_mlp().row(3), m.last_h_mlp().row(1));
}

TEST(GnnBranch, PermutationEquivariantInEvalMode) {
  CounterRng rng(7);
  HybridModel m(small_config());
  const auto g = random_test_graph(11, 0.3, rng);
  const Matrix x = random_matrix(11, 6, rng);
  std::vector<std::uint32_t> perm(11);
  std::iota(perm.begin(), perm.end(), 0u);
  shuffle(std::span<std::uint32_t>(perm), rng);
  Matrix xp(11, 6);
  for (std::uint32_t i = 0; i < 11; ++i) xp.row(perm[i]) = x.row(i);
  const auto out = m.forward(g, x, {nn::Mode::eval, 0});
  const Matrix h = m.last_h_gnn();
  const auto outp = m.forward(graph::permute(g, perm), xp, {nn::Mode::eval, 0});
  for (std::uint32_t i = 0; i < 11; ++i) {
    EXPECT_TRUE(m.last_h_gnn().row(perm[i]).isApprox(h.row(i), 1e-12));
    EXPECT_NEAR(outp.y_hat(perm[i]), out.y_hat(i), 1e-12);
  }
}

TEST(HybridModel, ShapeChecksAndConfigValidation) {
  CounterRng rng(8);
  HybridModel m(small_config());
  const auto g = random_test_graph(5, 0.3, rng);
  EXPECT_THROW(m.forward(g, random_matrix(4, 6, rng), {}), Error);
  EXPECT_THROW(m.forward(g, random_matrix(5, 7, rng), {}), Error);
  auto bad = small_config();
  bad.dropout = 1.0;
  EXPECT_THROW(HybridModel{bad}, Error);
  bad = small_config();
  bad.gnn_layers = 0;
  EXPECT_THROW(HybridModel{bad}, Error);
}

TEST(ModelConfig, JsonRoundTrip) {
  auto cfg = small_config();
  cfg.activation = nn::Activation::leaky_relu;
  cfg.residual = false;
  cfg.task = data::Task::attack;
  const auto back = model_config_from_json(to_json(cfg));
  EXPECT_EQ(to_json(back), to_json(cfg));
  EXPECT_EQ(back.activation, nn::Activation::leaky_relu);
  EXPECT_THROW(model_config_from_json("{not json"), Error);
}

TEST(HybridModel, ParameterNamesAreUniqueAndCounted) {
  HybridModel m(small_config());
  std::set<std::string> names;
  std::size_t total = 0;
  for (auto* p : m.parameters()) {
    EXPECT_TRUE(names.insert(p->name).second) << p->name;
    total += static_cast<std::size_t>(p->size());
  }
  EXPECT_EQ(m.parameter_count(), total);
  EXPECT_EQ(m.buffers().size(), 6u);
}

}  // namespace
}  // namespace civgraph::model
