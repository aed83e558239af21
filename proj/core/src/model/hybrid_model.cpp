#include "civgraph/model/hybrid_model.hpp"

#include <json.hpp>

#include "civgraph/error.hpp"

namespace civgraph::model {

namespace {

enum Stream : std::uint64_t { kGnnStream = 1, kMlpStream = 2, kFusionStream = 3, kClassifierStream = 4 };
constexpr std::uint64_t kMlpDropoutSalt = 100;
constexpr std::uint64_t kClassifierDropoutSalt = 200;

}  // namespace

void ModelConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::invalid_argument, std::string("model config: ") + what);
  };
  require(input_dim > 0, "input_dim must be positive");
  require(hidden_dim > 0, "hidden_dim must be positive");
  require(gnn_layers >= 1, "gnn_layers must be >= 1");
  require(heads >= 1, "heads must be >= 1");
  require(mlp_layers >= 1, "mlp_layers must be >= 1");
  require(classifier_hidden > 0, "classifier_hidden must be positive");
  require(attention_hidden > 0, "attention_hidden must be positive");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
  require(bn_momentum >= 0.0 && bn_momentum <= 1.0, "bn_momentum must lie in [0, 1]");
}

std::string to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["input_dim"] = cfg.input_dim;
  j["hidden_dim"] = cfg.hidden_dim;
  j["gnn_layers"] = cfg.gnn_layers;
  j["heads"] = cfg.heads;
  j["mlp_layers"] = cfg.mlp_layers;
  j["classifier_hidden"] = cfg.classifier_hidden;
  j["attention_hidden"] = cfg.attention_hidden;
  j["dropout"] = cfg.dropout;
  j["negative_slope"] = cfg.negative_slope;
  j["bn_momentum"] = cfg.bn_momentum;
  j["batch_norm"] = cfg.batch_norm;
  j["batch_norm_final"] = cfg.batch_norm_final;
  j["residual"] = cfg.residual;
  j["activation"] = std::string(nn::to_string(cfg.activation));
  j["attention_activation"] = std::string(nn::to_string(cfg.attention_activation));
  j["task"] = std::string(data::to_string(cfg.task));
  j["seed"] = cfg.seed;
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  ModelConfig cfg;
  try {
    const auto j = nlohmann::json::parse(text);
    cfg.input_dim = j.at("input_dim").get<nn::Index>();
    cfg.hidden_dim = j.at("hidden_dim").get<nn::Index>();
    cfg.gnn_layers = j.at("gnn_layers").get<nn::Index>();
    cfg.heads = j.at("heads").get<nn::Index>();
    cfg.mlp_layers = j.at("mlp_layers").get<nn::Index>();
    cfg.classifier_hidden = j.at("classifier_hidden").get<nn::Index>();
    cfg.attention_hidden = j.at("attention_hidden").get<nn::Index>();
    cfg.dropout = j.at("dropout").get<double>();
    cfg.negative_slope = j.at("negative_slope").get<double>();
    cfg.bn_momentum = j.at("bn_momentum").get<double>();
    cfg.batch_norm = j.at("batch_norm").get<bool>();
    cfg.batch_norm_final = j.at("batch_norm_final").get<bool>();
    cfg.residual = j.at("residual").get<bool>();
    cfg.activation = nn::parse_activation(j.at("activation").get<std::string>());
    cfg.attention_activation = nn::parse_activation(j.at("attention_activation").get<std::string>());
    cfg.task = data::parse_task(j.at("task").get<std::string>());
    cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("model config JSON: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

GnnBranch::GnnBranch(const ModelConfig& cfg, CounterRng& rng) {
  nn::Index in = cfg.input_dim;
  for (nn::Index l = 0; l < cfg.gnn_layers; ++l) {
    const bool last = l + 1 == cfg.gnn_layers;
    const std::string name = "gnn." + std::to_string(l);
    nn::GatConfig gc;
    gc.in_dim = in;
    gc.head_dim = cfg.hidden_dim;
    gc.heads = last ? 1 : cfg.heads;
    gc.concat = !last;
    gc.negative_slope = cfg.negative_slope;
    CounterRng layer_rng = rng.split(static_cast<std::uint64_t>(l));
    Block block;
    block.gat = nn::GatLayer(name + ".gat", gc, layer_rng);
    const nn::Index out = gc.out_dim();
    if (last ? cfg.batch_norm_final : cfg.batch_norm) block.norm.emplace(name + ".bn", out, cfg.bn_momentum);
    block.act = nn::ActivationLayer(last ? nn::Activation::identity : cfg.activation);
    block.residual = cfg.residual;
    if (cfg.residual && in != out) {
      CounterRng proj_rng = rng.split(1000 + static_cast<std::uint64_t>(l));
      block.projection.emplace(name + ".proj", in, out, false, proj_rng);
    }
    blocks_.push_back(std::move(block));
    in = out;
  }
}

Matrix GnnBranch::forward(const Matrix& x, const graph::CommentGraph& g, nn::Mode mode) {
  Matrix h = x;
  for (auto& block : blocks_) {
    Matrix out = block.gat.forward(h, g);
    if (block.norm) out = block.norm->forward(out, mode);
    out = block.act.forward(out);
    if (block.residual) out += block.projection ? block.projection->forward(h) : h;
    h = std::move(out);
  }
  return h;
}

Matrix GnnBranch::backward(const Matrix& d_out) {
  Matrix d = d_out;
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    Matrix d_skip;
    if (it->residual) d_skip = it->projection ? it->projection->backward(d) : d;
    Matrix g = it->act.backward(d);
    if (it->norm) g = it->norm->backward(g);
    d = it->gat.backward(g);
    if (it->residual) d += d_skip;
  }
  return d;
}

void GnnBranch::collect(nn::ParameterRefs& out) {
  for (auto& block : blocks_) {
    block.gat.collect(out);
    if (block.norm) block.norm->collect(out);
    if (block.projection) block.projection->collect(out);
  }
}

void GnnBranch::collect_buffers(nn::BufferRefs& out) {
  for (auto& block : blocks_) {
    if (block.norm) block.norm->collect_buffers(out);
  }
}

MlpBranch::MlpBranch(const ModelConfig& cfg, CounterRng& rng) {
  nn::Index in = cfg.input_dim;
  for (nn::Index l = 0; l < cfg.mlp_layers; ++l) {
    CounterRng layer_rng = rng.split(static_cast<std::uint64_t>(l));
    linears_.emplace_back("mlp." + std::to_string(l), in, cfg.hidden_dim, true, layer_rng);
    if (l + 1 < cfg.mlp_layers) {
      acts_.emplace_back(cfg.activation);
      drops_.emplace_back(cfg.dropout, kMlpDropoutSalt + static_cast<std::uint64_t>(l));
    }
    in = cfg.hidden_dim;
  }
}

Matrix MlpBranch::forward(const Matrix& x, const nn::ForwardContext& ctx) {
  Matrix h = x;
  for (std::size_t l = 0; l < linears_.size(); ++l) {
    h = linears_[l].forward(h);
    if (l < acts_.size()) {
      h = acts_[l].forward(h);
      h = drops_[l].forward(h, ctx);
    }
  }
  return h;
}

Matrix MlpBranch::backward(const Matrix& d_out) {
  Matrix d = d_out;
  for (std::size_t l = linears_.size(); l-- > 0;) {
    if (l < acts_.size()) {
      d = drops_[l].backward(d);
      d = acts_[l].backward(d);
    }
    d = linears_[l].backward(d);
  }
  return d;
}

void MlpBranch::collect(nn::ParameterRefs& out) {
  for (auto& linear : linears_) linear.collect(out);
}

FusionAttention::FusionAttention(const ModelConfig& cfg, CounterRng& rng) {
  CounterRng hidden_rng = rng.split(0);
  CounterRng scorer_rng = rng.split(1);
  hidden_ = nn::Linear("fusion.hidden", 2 * cfg.hidden_dim, cfg.attention_hidden, true, hidden_rng);
  act_ = nn::ActivationLayer(cfg.attention_activation);
  scorer_ = nn::Linear("fusion.scorer", cfg.attention_hidden, 2, true, scorer_rng);
}

void FusionAttention::set_override(std::optional<double> alpha_gnn) {
  if (alpha_gnn && !(*alpha_gnn >= 0.0 && *alpha_gnn <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "fusion override must lie in [0, 1]");
  }
  override_ = alpha_gnn;
}

FusionOutput FusionAttention::forward(const Matrix& h_gnn, const Matrix& h_mlp) {
  if (h_gnn.rows() != h_mlp.rows() || h_gnn.cols() != h_mlp.cols()) {
    throw Error(ErrorKind::shape_mismatch, "fusion: branch outputs differ in shape");
  }
  h_gnn_ = h_gnn;
  h_mlp_ = h_mlp;
  const auto n = h_gnn.rows();
  FusionOutput out;
  if (override_) {
    out.alpha_gnn = Vector::Constant(n, *override_);
  } else {
    Matrix concat(n, h_gnn.cols() + h_mlp.cols());
    concat << h_gnn, h_mlp;
    const Matrix logits = scorer_.forward(act_.forward(hidden_.forward(concat)));
    // two-way softmax, written as a logistic of the logit difference
    out.alpha_gnn = (logits.col(0) - logits.col(1)).unaryExpr([](double v) { return nn::sigmoid(v); });
  }
  out.alpha_mlp = (1.0 - out.alpha_gnn.array()).matrix();
  out.h_fused = (h_gnn.array().colwise() * out.alpha_gnn.array() + h_mlp.array().colwise() * out.alpha_mlp.array())
                    .matrix();
  alpha_gnn_ = out.alpha_gnn;
  return out;
}

std::pair<Matrix, Matrix> FusionAttention::backward(const Matrix& d_fused) {
  const Vector alpha_mlp = (1.0 - alpha_gnn_.array()).matrix();
  Matrix d_gnn = (d_fused.array().colwise() * alpha_gnn_.array()).matrix();
  Matrix d_mlp = (d_fused.array().colwise() * alpha_mlp.array()).matrix();
  if (override_) return {std::move(d_gnn), std::move(d_mlp)};

  const Vector d_alpha = (d_fused.array() * (h_gnn_ - h_mlp_).array()).rowwise().sum();
  const Vector d_diff = (d_alpha.array() * alpha_gnn_.array() * alpha_mlp.array()).matrix();
  Matrix d_logits(d_fused.rows(), 2);
  d_logits.col(0) = d_diff;
  d_logits.col(1) = -d_diff;
  const Matrix d_concat = hidden_.backward(act_.backward(scorer_.backward(d_logits)));
  const auto width = h_gnn_.cols();
  d_gnn += d_concat.leftCols(width);
  d_mlp += d_concat.rightCols(width);
  return {std::move(d_gnn), std::move(d_mlp)};
}

void FusionAttention::collect(nn::ParameterRefs& out) {
  hidden_.collect(out);
  scorer_.collect(out);
}

Classifier::Classifier(const ModelConfig& cfg, CounterRng& rng) {
  CounterRng first_rng = rng.split(0);
  CounterRng last_rng = rng.split(1);
  first_ = nn::Linear("classifier.0", cfg.hidden_dim, cfg.classifier_hidden, true, first_rng);
  act_ = nn::ActivationLayer(cfg.activation);
  drop_ = nn::Dropout(cfg.dropout, kClassifierDropoutSalt);
  last_ = nn::Linear("classifier.1", cfg.classifier_hidden, 1, true, last_rng);
}

Vector Classifier::forward(const Matrix& h, const nn::ForwardContext& ctx) {
  const Matrix logit = last_.forward(drop_.forward(act_.forward(first_.forward(h)), ctx));
  y_hat_ = nn::sigmoid(logit).col(0);
  return y_hat_;
}

Matrix Classifier::backward(const Vector& d_y_hat) {
  if (d_y_hat.size() != y_hat_.size()) throw Error(ErrorKind::shape_mismatch, "classifier: gradient length");
  Matrix d_logit(d_y_hat.size(), 1);
  d_logit.col(0) = (d_y_hat.array() * y_hat_.array() * (1.0 - y_hat_.array())).matrix();
  return first_.backward(act_.backward(drop_.backward(last_.backward(d_logit))));
}

void Classifier::collect(nn::ParameterRefs& out) {
  first_.collect(out);
  last_.collect(out);
}

HybridModel::HybridModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const CounterRng root(cfg.seed);
  CounterRng gnn_rng = root.split(kGnnStream);
  CounterRng mlp_rng = root.split(kMlpStream);
  CounterRng fusion_rng = root.split(kFusionStream);
  CounterRng classifier_rng = root.split(kClassifierStream);
  gnn_ = GnnBranch(cfg_, gnn_rng);
  mlp_ = MlpBranch(cfg_, mlp_rng);
  fusion_ = FusionAttention(cfg_, fusion_rng);
  classifier_ = Classifier(cfg_, classifier_rng);
}

ForwardResult HybridModel::forward(const graph::CommentGraph& g, const Matrix& x, const nn::ForwardContext& ctx) {
  if (x.rows() != static_cast<nn::Index>(g.n_nodes)) {
    throw Error(ErrorKind::shape_mismatch, "model: " + std::to_string(x.rows()) + " feature rows vs " +
                                               std::to_string(g.n_nodes) + " graph nodes");
  }
  if (x.cols() != cfg_.input_dim) {
    throw Error(ErrorKind::shape_mismatch, "model: feature width " + std::to_string(x.cols()) + ", expected " +
                                               std::to_string(cfg_.input_dim));
  }
  h_gnn_ = gnn_.forward(x, g, ctx.mode);
  h_mlp_ = mlp_.forward(x, ctx);
  ForwardResult result;
  result.fusion = fusion_.forward(h_gnn_, h_mlp_);
  result.y_hat = classifier_.forward(result.fusion.h_fused, ctx);
  return result;
}

void HybridModel::backward(const Vector& d_y_hat) {
  const Matrix d_fused = classifier_.backward(d_y_hat);
  auto [d_gnn, d_mlp] = fusion_.backward(d_fused);
  gnn_.backward(d_gnn);
  mlp_.backward(d_mlp);
}

void HybridModel::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

nn::ParameterRefs HybridModel::parameters() {
  nn::ParameterRefs out;
  gnn_.collect(out);
  mlp_.collect(out);
  fusion_.collect(out);
  classifier_.collect(out);
  return out;
}

nn::BufferRefs HybridModel::buffers() {
  nn::BufferRefs out;
  gnn_.collect_buffers(out);
  return out;
}

std::size_t HybridModel::parameter_count() {
  std::size_t total = 0;
  for (auto* p : parameters()) total += static_cast<std::size_t>(p->size());
  return total;
}

Matrix to_features(const std::vector<float>& row_major, std::size_t rows, std::size_t cols) {
  if (row_major.size() != rows * cols) throw Error(ErrorKind::shape_mismatch, "feature buffer size");
  Matrix x(static_cast<nn::Index>(rows), static_cast<nn::Index>(cols));
  for (std::size_t i = 0; i < row_major.size(); ++i) x.data()[i] = row_major[i];
  return x;
}

}  // namespace civgraph::model
