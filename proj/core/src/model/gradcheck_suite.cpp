#include "civgraph/model/gradcheck_suite.hpp"

#include <functional>

#include "civgraph/graph/builder.hpp"
#include "civgraph/model/hybrid_model.hpp"
#include "civgraph/nn/gat.hpp"
#include "civgraph/nn/layers.hpp"

namespace civgraph::model {

namespace {

using nn::GradcheckStats;
using nn::Matrix;
using nn::Vector;

Matrix random_matrix(nn::Index rows, nn::Index cols, double scale, CounterRng& rng) {
  Matrix m(rows, cols);
  for (nn::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * (2.0 * rng.uniform() - 1.0);
  return m;
}

void randomize(nn::Parameter& p, double center, double scale, CounterRng& rng) {
  for (nn::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = center + scale * (2.0 * rng.uniform() - 1.0);
}

struct Probe {
  std::function<Matrix(const Matrix&)> forward;
  std::function<Matrix(const Matrix&)> backward;  // dL/dout -> dL/dinput
};

/// Checks the input and every parameter under L = sum(forward(x) * R).
GradcheckStats check_module(const std::string& label, Matrix x, const nn::ParameterRefs& params, const Probe& probe,
                            CounterRng& rng, const nn::GradcheckOptions& opts) {
  const Matrix first = probe.forward(x);
  const Matrix r = random_matrix(first.rows(), first.cols(), 1.0, rng);
  for (auto* p : params) p->zero_grad();
  probe.forward(x);
  const Matrix dx = probe.backward(r);
  std::vector<Matrix> grads;
  for (auto* p : params) grads.push_back(p->grad);

  auto loss = [&] { return (probe.forward(x).array() * r.array()).sum(); };
  GradcheckStats stats = nn::check_gradient(label + ".input", x, dx, loss, opts);
  for (std::size_t i = 0; i < params.size(); ++i) {
    stats.merge(nn::check_gradient(params[i]->name, params[i]->value, grads[i], loss, opts));
  }
  return stats;
}

ModelConfig tiny_config(std::uint64_t seed) {
  ModelConfig cfg;
  cfg.input_dim = 6;
  cfg.hidden_dim = 4;
  cfg.gnn_layers = 3;
  cfg.heads = 2;
  cfg.mlp_layers = 2;
  cfg.classifier_hidden = 5;
  cfg.attention_hidden = 3;
  cfg.dropout = 0.25;
  cfg.seed = seed;
  return cfg;
}

void perturb_model(HybridModel& model, CounterRng& rng) {
  for (auto* p : model.parameters()) {
    if (p->name.ends_with("edge_beta") || p->name.ends_with(".beta") || p->name.ends_with(".bias")) {
      randomize(*p, 0.0, 0.3, rng);
    } else if (p->name.ends_with(".gamma")) {
      randomize(*p, 1.0, 0.3, rng);
    }
  }
}

}  // namespace

graph::CommentGraph random_test_graph(std::uint32_t n, double edge_probability, CounterRng& rng) {
  std::vector<graph::Edge> edges;
  for (std::uint32_t i = 1; i < n; ++i) {
    // a spanning path keeps the graph connected
    edges.push_back({i - 1, i, 0.5 + 0.5 * rng.uniform(), false});
    for (std::uint32_t j = 0; j + 1 < i; ++j) {
      if (rng.uniform() < edge_probability) edges.push_back({j, i, 0.5 + 0.5 * rng.uniform(), false});
    }
  }
  return graph::finalize_graph(edges, n);
}

std::vector<GradcheckRow> run_gradcheck_suite(const GradcheckSuiteOptions& options) {
  const CounterRng root(options.seed);
  const auto& opts = options.check;
  std::vector<GradcheckRow> rows;
  auto record = [&](std::string op, GradcheckStats stats) {
    const bool passed = stats.checked > 0 && stats.max_rel_error <= options.tolerance;
    rows.push_back({std::move(op), std::move(stats), passed});
  };

  {
    CounterRng rng = root.split(1);
    nn::Linear layer("linear", 5, 4, true, rng);
    randomize(layer.bias, 0.0, 0.5, rng);
    Probe probe{[&](const Matrix& x) { return layer.forward(x); }, [&](const Matrix& d) { return layer.backward(d); }};
    record("linear", check_module("linear", random_matrix(7, 5, 1.0, rng), {&layer.weight, &layer.bias}, probe, rng, opts));
  }
  for (auto [name, kind] : {std::pair{"relu", nn::Activation::relu}, std::pair{"leaky_relu", nn::Activation::leaky_relu},
                            std::pair{"tanh", nn::Activation::tanh}}) {
    CounterRng rng = root.split(2).split(static_cast<std::uint64_t>(kind));
    nn::ActivationLayer act(kind, 0.2);
    Probe probe{[&](const Matrix& x) { return act.forward(x); }, [&](const Matrix& d) { return act.backward(d); }};
    record(name, check_module(name, random_matrix(6, 5, 1.0, rng), {}, probe, rng, opts));
  }
  {
    CounterRng rng = root.split(3);
    Matrix y;
    Probe probe{[&](const Matrix& x) { return y = nn::sigmoid(x); },
                [&](const Matrix& d) { return nn::sigmoid_backward(y, d); }};
    record("sigmoid", check_module("sigmoid", random_matrix(6, 3, 3.0, rng), {}, probe, rng, opts));
  }
  {
    CounterRng rng = root.split(4);
    Matrix y_hat(12, 1);
    Vector y(12);
    for (nn::Index i = 0; i < 12; ++i) {
      y_hat(i, 0) = 0.05 + 0.9 * rng.uniform();
      y(i) = static_cast<double>(i % 2);
    }
    const Vector analytic = nn::bce_loss_backward(y_hat.col(0), y);
    auto loss = [&] { return nn::bce_loss(y_hat.col(0), y); };
    record("bce", nn::check_gradient("bce.y_hat", y_hat, Matrix(analytic), loss, opts));
  }
  for (auto mode : {nn::Mode::train, nn::Mode::eval}) {
    const bool train = mode == nn::Mode::train;
    CounterRng rng = root.split(5).split(train ? 0 : 1);
    nn::BatchNorm bn("batch_norm", 4, 0.1);
    randomize(bn.gamma, 1.0, 0.5, rng);
    randomize(bn.beta, 0.0, 0.5, rng);
    bn.running_mean = random_matrix(1, 4, 0.5, rng);
    bn.running_var = (random_matrix(1, 4, 0.5, rng).array() + 1.0).matrix();
    const Matrix mean = bn.running_mean;
    const Matrix var = bn.running_var;
    Probe probe{[&](const Matrix& x) {
                  // keep eval statistics fixed across evaluations
                  bn.running_mean = mean;
                  bn.running_var = var;
                  return bn.forward(x, mode);
                },
                [&](const Matrix& d) { return bn.backward(d); }};
    const std::string name = train ? "batch_norm_train" : "batch_norm_eval";
    record(name, check_module(name, random_matrix(8, 4, 2.0, rng), {&bn.gamma, &bn.beta}, probe, rng, opts));
  }
  {
    CounterRng rng = root.split(6);
    nn::Dropout drop(0.4, 7);
    const nn::ForwardContext ctx{nn::Mode::train, 99};
    Probe probe{[&](const Matrix& x) { return drop.forward(x, ctx); }, [&](const Matrix& d) { return drop.backward(d); }};
    record("dropout", check_module("dropout", random_matrix(6, 5, 1.0, rng), {}, probe, rng, opts));
  }
  for (bool concat : {true, false}) {
    CounterRng rng = root.split(7).split(concat ? 0 : 1);
    const auto g = random_test_graph(7, 0.35, rng);
    nn::GatConfig gc;
    gc.in_dim = 5;
    gc.head_dim = 3;
    gc.heads = 3;
    gc.concat = concat;
    nn::GatLayer gat("gat", gc, rng);
    randomize(gat.edge_beta, 0.0, 1.0, rng);
    randomize(gat.bias, 0.0, 0.5, rng);
    nn::ParameterRefs params;
    gat.collect(params);
    Probe probe{[&](const Matrix& x) { return gat.forward(x, g); }, [&](const Matrix& d) { return gat.backward(d); }};
    const std::string name = concat ? "gat_concat" : "gat_mean";
    record(name, check_module(name, random_matrix(7, 5, 1.0, rng), params, probe, rng, opts));
  }

  const ModelConfig cfg = tiny_config(options.seed);
  {
    CounterRng rng = root.split(8);
    const auto g = random_test_graph(8, 0.3, rng);
    GnnBranch branch(cfg, rng);
    nn::ParameterRefs params;
    branch.collect(params);
    for (auto* p : params) {
      if (p->name.ends_with("edge_beta") || p->name.ends_with(".bias")) randomize(*p, 0.0, 0.5, rng);
    }
    Probe probe{[&](const Matrix& x) { return branch.forward(x, g, nn::Mode::train); },
                [&](const Matrix& d) { return branch.backward(d); }};
    record("gnn_branch", check_module("gnn_branch", random_matrix(8, cfg.input_dim, 1.0, rng), params, probe, rng, opts));
  }
  {
    CounterRng rng = root.split(9);
    MlpBranch branch(cfg, rng);
    nn::ParameterRefs params;
    branch.collect(params);
    const nn::ForwardContext ctx{nn::Mode::train, 5};
    Probe probe{[&](const Matrix& x) { return branch.forward(x, ctx); }, [&](const Matrix& d) { return branch.backward(d); }};
    record("mlp_branch", check_module("mlp_branch", random_matrix(8, cfg.input_dim, 1.0, rng), params, probe, rng, opts));
  }
  {
    CounterRng rng = root.split(10);
    FusionAttention fusion(cfg, rng);
    nn::ParameterRefs params;
    fusion.collect(params);
    Matrix h_mlp = random_matrix(8, cfg.hidden_dim, 1.0, rng);
    // The probe input is h_gnn; a second pass below perturbs h_mlp.
    Probe by_gnn{[&](const Matrix& h) { return fusion.forward(h, h_mlp).h_fused; },
                 [&](const Matrix& d) { return fusion.backward(d).first; }};
    Matrix h_gnn = random_matrix(8, cfg.hidden_dim, 1.0, rng);
    GradcheckStats stats = check_module("fuse.h_gnn", h_gnn, params, by_gnn, rng, opts);
    Probe by_mlp{[&](const Matrix& h) { return fusion.forward(h_gnn, h).h_fused; },
                 [&](const Matrix& d) { return fusion.backward(d).second; }};
    stats.merge(check_module("fuse.h_mlp", h_mlp, {}, by_mlp, rng, opts));
    record("fuse", std::move(stats));
  }
  {
    CounterRng rng = root.split(11);
    Classifier head(cfg, rng);
    nn::ParameterRefs params;
    head.collect(params);
    const nn::ForwardContext ctx{nn::Mode::train, 6};
    Probe probe{[&](const Matrix& h) { return Matrix(head.forward(h, ctx)); },
                [&](const Matrix& d) { return head.backward(d.col(0)); }};
    record("classify", check_module("classify", random_matrix(8, cfg.hidden_dim, 1.0, rng), params, probe, rng, opts));
  }
  {
    CounterRng rng = root.split(12);
    const auto g = random_test_graph(8, 0.3, rng);
    HybridModel model(cfg);
    perturb_model(model, rng);
    Matrix x = random_matrix(8, cfg.input_dim, 1.0, rng);
    Vector y(8);
    for (nn::Index i = 0; i < 8; ++i) y(i) = static_cast<double>(i % 2);
    const nn::ForwardContext ctx{nn::Mode::train, 17};

    model.zero_grad();
    const auto result = model.forward(g, x, ctx);
    model.backward(nn::bce_loss_backward(result.y_hat, y));
    const auto params = model.parameters();
    std::vector<Matrix> grads;
    for (auto* p : params) grads.push_back(p->grad);

    auto loss = [&] { return nn::bce_loss(model.forward(g, x, ctx).y_hat, y); };
    GradcheckStats stats;
    for (std::size_t i = 0; i < params.size(); ++i) {
      stats.merge(nn::check_gradient(params[i]->name, params[i]->value, grads[i], loss, opts));
    }
    record("hybrid_model", std::move(stats));
  }
  return rows;
}

}  // namespace civgraph::model
