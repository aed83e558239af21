#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "civgraph/data/corpus.hpp"
#include "civgraph/graph/comment_graph.hpp"
#include "civgraph/nn/gat.hpp"
#include "civgraph/nn/layers.hpp"
#include "civgraph/nn/tensor.hpp"

namespace civgraph::model {

using nn::Matrix;
using nn::Vector;

struct ModelConfig {
  nn::Index input_dim = 768;
  nn::Index hidden_dim = 256;        // d_h, width of both branch outputs
  nn::Index gnn_layers = 3;
  nn::Index heads = 3;               // heads on every GAT layer but the last
  nn::Index mlp_layers = 2;
  nn::Index classifier_hidden = 128;  // 256 -> 128 -> 1
  nn::Index attention_hidden = 128;   // fusion scorer 512 -> 128 -> 2
  double dropout = 0.3;
  double negative_slope = 0.2;       // inside GAT attention logits
  double bn_momentum = 0.1;
  bool batch_norm = true;            // after intermediate GAT layers
  bool batch_norm_final = true;      // after the last GAT layer
  bool residual = true;
  nn::Activation activation = nn::Activation::relu;
  nn::Activation attention_activation = nn::Activation::tanh;
  data::Task task = data::Task::toxicity;
  std::uint64_t seed = 0;            // parameter initialization

  void validate() const;
};

std::string to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

struct FusionOutput {
  Matrix h_fused;
  Vector alpha_gnn;
  Vector alpha_mlp;
};

struct ForwardResult {
  Vector y_hat;
  FusionOutput fusion;
};

/// Stacked GAT layers. Layer l computes
///   out = act(BN(GAT(h))) + R(h)
/// where the activation is skipped on the last layer and R is the identity
/// when widths agree, otherwise a bias-free linear projection.
class GnnBranch {
 public:
  GnnBranch() = default;
  GnnBranch(const ModelConfig& cfg, CounterRng& rng);

  Matrix forward(const Matrix& x, const graph::CommentGraph& g, nn::Mode mode);
  Matrix backward(const Matrix& d_out);
  void collect(nn::ParameterRefs& out);
  void collect_buffers(nn::BufferRefs& out);

  nn::GatLayer& gat(std::size_t i) { return blocks_[i].gat; }
  std::optional<nn::BatchNorm>& norm(std::size_t i) { return blocks_[i].norm; }
  std::size_t depth() const { return blocks_.size(); }

 private:
  struct Block {
    nn::GatLayer gat;
    std::optional<nn::BatchNorm> norm;
    nn::ActivationLayer act;
    bool residual = false;
    std::optional<nn::Linear> projection;  // set when residual widths differ
  };
  std::vector<Block> blocks_;
};

/// Row-wise MLP over the raw features; no message passing.
class MlpBranch {
 public:
  MlpBranch() = default;
  MlpBranch(const ModelConfig& cfg, CounterRng& rng);

  Matrix forward(const Matrix& x, const nn::ForwardContext& ctx);
  Matrix backward(const Matrix& d_out);
  void collect(nn::ParameterRefs& out);

 private:
  std::vector<nn::Linear> linears_;
  std::vector<nn::ActivationLayer> acts_;
  std::vector<nn::Dropout> drops_;
};

/// Per-node two-way softmax over [h_gnn || h_mlp] and the convex blend.
class FusionAttention {
 public:
  FusionAttention() = default;
  FusionAttention(const ModelConfig& cfg, CounterRng& rng);

  FusionOutput forward(const Matrix& h_gnn, const Matrix& h_mlp);
  /// Returns {dL/dh_gnn, dL/dh_mlp}.
  std::pair<Matrix, Matrix> backward(const Matrix& d_fused);
  void collect(nn::ParameterRefs& out);

  /// Pins alpha_gnn for every node; the scorer is bypassed and receives no
  /// gradient while set.
  void set_override(std::optional<double> alpha_gnn);
  std::optional<double> override_value() const { return override_; }

  nn::Linear& hidden() { return hidden_; }
  nn::Linear& scorer() { return scorer_; }

 private:
  nn::Linear hidden_;
  nn::ActivationLayer act_;
  nn::Linear scorer_;
  std::optional<double> override_;
  Matrix h_gnn_;
  Matrix h_mlp_;
  Vector alpha_gnn_;
};

/// hidden -> classifier_hidden -> 1 with a sigmoid on the logit.
class Classifier {
 public:
  Classifier() = default;
  Classifier(const ModelConfig& cfg, CounterRng& rng);

  Vector forward(const Matrix& h, const nn::ForwardContext& ctx);
  /// `d_y_hat` is dL/dy_hat; returns dL/dh.
  Matrix backward(const Vector& d_y_hat);
  void collect(nn::ParameterRefs& out);

  nn::Linear& first() { return first_; }
  nn::Linear& last() { return last_; }

 private:
  nn::Linear first_;
  nn::ActivationLayer act_;
  nn::Dropout drop_;
  nn::Linear last_;
  Vector y_hat_;
};

class HybridModel {
 public:
  HybridModel() = default;
  explicit HybridModel(const ModelConfig& cfg);

  ForwardResult forward(const graph::CommentGraph& g, const Matrix& x, const nn::ForwardContext& ctx);
  /// Backpropagates dL/dy_hat through the last forward pass.
  void backward(const Vector& d_y_hat);

  void zero_grad();
  nn::ParameterRefs parameters();
  nn::BufferRefs buffers();
  std::size_t parameter_count();

  const ModelConfig& config() const { return cfg_; }
  GnnBranch& gnn() { return gnn_; }
  MlpBranch& mlp() { return mlp_; }
  FusionAttention& fusion() { return fusion_; }
  Classifier& classifier() { return classifier_; }

  /// Last branch outputs, kept for interpretability and tests.
  const Matrix& last_h_gnn() const { return h_gnn_; }
  const Matrix& last_h_mlp() const { return h_mlp_; }

 private:
  ModelConfig cfg_;
  GnnBranch gnn_;
  MlpBranch mlp_;
  FusionAttention fusion_;
  Classifier classifier_;
  Matrix h_gnn_;
  Matrix h_mlp_;
};

/// Converts binary32 embedding rows into the model's input matrix.
Matrix to_features(const std::vector<float>& row_major, std::size_t rows, std::size_t cols);

}  // namespace civgraph::model
