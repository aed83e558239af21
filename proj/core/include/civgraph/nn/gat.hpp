#pragma once

#include <string>
#include <vector>

#include "civgraph/graph/comment_graph.hpp"
#include "civgraph/nn/tensor.hpp"
#include "civgraph/rng.hpp"

namespace civgraph::nn {

struct GatConfig {
  Index in_dim = 0;
  Index head_dim = 0;
  Index heads = 1;
  bool concat = true;  // concatenate heads, otherwise average them
  double negative_slope = 0.2;
  bool bias = true;

  Index out_dim() const { return concat ? heads * head_dim : head_dim; }
};

/// Graph attention layer with an edge-weight term on the attention logits.
///
/// Per head k, with z = h W_k:
///   e_ij  = LeakyReLU(a_src . z_i + a_dst . z_j) + beta_k * w_ij
///   alpha = softmax of e_ij over the CSR row of i (self-loop included)
///   out_i = sum_j alpha_ij z_j
/// Heads are concatenated or averaged, then the bias is added.
class GatLayer {
 public:
  GatLayer() = default;
  GatLayer(const std::string& name, const GatConfig& cfg, CounterRng& rng);

  Matrix forward(const Matrix& h, const graph::CommentGraph& g);
  /// Accumulates parameter gradients and returns dL/dh.
  Matrix backward(const Matrix& d_out);

  void collect(ParameterRefs& out);

  const GatConfig& config() const { return cfg_; }
  /// Attention coefficients of the last forward, aligned with CSR entries.
  const std::vector<double>& attention(Index head) const { return alpha_[static_cast<std::size_t>(head)]; }

  Parameter weight;      // in_dim x (heads * head_dim)
  Parameter att_src;     // heads x head_dim
  Parameter att_dst;     // heads x head_dim
  Parameter edge_beta;   // 1 x heads, starts at zero
  Parameter bias;        // 1 x out_dim

 private:
  GatConfig cfg_;
  const graph::CommentGraph* graph_ = nullptr;
  Matrix input_;
  Matrix z_;
  std::vector<std::vector<double>> logit_pre_;  // per head, a_src.z_i + a_dst.z_j
  std::vector<std::vector<double>> alpha_;      // per head
};

}  // namespace civgraph::nn
