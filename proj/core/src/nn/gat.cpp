#include "civgraph/nn/gat.hpp"

#include <algorithm>
#include <cmath>

#include "civgraph/error.hpp"
#include "civgraph/nn/gradcheck.hpp"
#include "civgraph/nn/layers.hpp"

namespace civgraph::nn {

GatLayer::GatLayer(const std::string& name, const GatConfig& cfg, CounterRng& rng)
    : weight(name + ".weight", cfg.in_dim, cfg.heads * cfg.head_dim),
      att_src(name + ".att_src", cfg.heads, cfg.head_dim),
      att_dst(name + ".att_dst", cfg.heads, cfg.head_dim),
      edge_beta(name + ".edge_beta", 1, cfg.heads),
      bias(name + ".bias", 1, cfg.out_dim()),
      cfg_(cfg) {
  if (cfg.in_dim <= 0 || cfg.head_dim <= 0 || cfg.heads <= 0) {
    throw Error(ErrorKind::invalid_argument, "gat '" + name + "': dimensions must be positive");
  }
  glorot_uniform(weight.value, cfg.in_dim, cfg.heads * cfg.head_dim, rng);
  glorot_uniform(att_src.value, cfg.head_dim, 1, rng);
  glorot_uniform(att_dst.value, cfg.head_dim, 1, rng);
  weight.normalize_storage();
  att_src.normalize_storage();
  att_dst.normalize_storage();
}

Matrix GatLayer::forward(const Matrix& h, const graph::CommentGraph& g) {
  if (h.rows() != static_cast<Index>(g.n_nodes)) {
    throw Error(ErrorKind::shape_mismatch, "gat '" + weight.name + "': " + std::to_string(h.rows()) +
                                               " feature rows for a graph of " + std::to_string(g.n_nodes) + " nodes");
  }
  if (h.cols() != cfg_.in_dim) throw Error(ErrorKind::shape_mismatch, "gat '" + weight.name + "': input width");

  graph_ = &g;
  input_ = h;
  z_ = h * weight.value;
  const Index n = h.rows();
  const Index f = cfg_.head_dim;
  const auto entries = static_cast<std::size_t>(g.n_entries());
  logit_pre_.assign(static_cast<std::size_t>(cfg_.heads), std::vector<double>(entries));
  alpha_.assign(static_cast<std::size_t>(cfg_.heads), std::vector<double>(entries));

  Matrix out = Matrix::Zero(n, cfg_.out_dim());
  const double head_scale = cfg_.concat ? 1.0 : 1.0 / static_cast<double>(cfg_.heads);
  for (Index k = 0; k < cfg_.heads; ++k) {
    const auto zk = z_.middleCols(k * f, f);
    const Vector s_src = zk * att_src.value.row(k).transpose();
    const Vector s_dst = zk * att_dst.value.row(k).transpose();
    const double beta = edge_beta.value(0, k);
    auto& pre = logit_pre_[static_cast<std::size_t>(k)];
    auto& alpha = alpha_[static_cast<std::size_t>(k)];
    const Index out_col = cfg_.concat ? k * f : 0;

    for (std::uint32_t i = 0; i < g.n_nodes; ++i) {
      const auto begin = g.row_offsets[i];
      const auto end = g.row_offsets[i + 1];
      if (begin == end) throw Error(ErrorKind::internal, "gat: node " + std::to_string(i) + " has no neighbors");
      double max_logit = -std::numeric_limits<double>::infinity();
      for (auto e = begin; e < end; ++e) {
        const auto j = g.col_indices[e];
        const double u = s_src[i] + s_dst[j];
        pre[e] = u;
        const double logit = (u > 0.0 ? u : cfg_.negative_slope * u) + beta * g.edge_weights[e];
        alpha[e] = logit;
        max_logit = std::max(max_logit, logit);
      }
      double denom = 0.0;
      for (auto e = begin; e < end; ++e) {
        alpha[e] = std::exp(alpha[e] - max_logit);
        denom += alpha[e];
      }
      auto out_row = out.row(i).segment(out_col, f);
      for (auto e = begin; e < end; ++e) {
        alpha[e] /= denom;
        out_row += (head_scale * alpha[e]) * zk.row(g.col_indices[e]);
      }
    }
    if (kink_probe::active()) kink_probe::record(pre);
  }
  if (cfg_.bias) out.rowwise() += bias.value.row(0);
  return out;
}

Matrix GatLayer::backward(const Matrix& d_out) {
  if (graph_ == nullptr) throw Error(ErrorKind::internal, "gat backward before forward");
  const auto& g = *graph_;
  const Index n = input_.rows();
  const Index f = cfg_.head_dim;
  if (d_out.rows() != n || d_out.cols() != cfg_.out_dim()) {
    throw Error(ErrorKind::shape_mismatch, "gat '" + weight.name + "': gradient shape");
  }
  if (cfg_.bias) bias.grad.row(0) += d_out.colwise().sum();

  const double head_scale = cfg_.concat ? 1.0 : 1.0 / static_cast<double>(cfg_.heads);
  Matrix dz = Matrix::Zero(n, cfg_.heads * f);
  for (Index k = 0; k < cfg_.heads; ++k) {
    const auto zk = z_.middleCols(k * f, f);
    const Index out_col = cfg_.concat ? k * f : 0;
    const auto& pre = logit_pre_[static_cast<std::size_t>(k)];
    const auto& alpha = alpha_[static_cast<std::size_t>(k)];
    Vector ds_src = Vector::Zero(n);
    Vector ds_dst = Vector::Zero(n);
    double d_beta = 0.0;
    auto dzk = dz.middleCols(k * f, f);

    std::vector<double> d_alpha;
    for (std::uint32_t i = 0; i < g.n_nodes; ++i) {
      const auto begin = g.row_offsets[i];
      const auto end = g.row_offsets[i + 1];
      const RowVector d_oi = head_scale * d_out.row(i).segment(out_col, f);
      d_alpha.resize(end - begin);
      double weighted = 0.0;
      for (auto e = begin; e < end; ++e) {
        const auto j = g.col_indices[e];
        const double da = d_oi.dot(zk.row(j));
        d_alpha[e - begin] = da;
        weighted += alpha[e] * da;
        dzk.row(j) += alpha[e] * d_oi;
      }
      for (auto e = begin; e < end; ++e) {
        const double d_logit = alpha[e] * (d_alpha[e - begin] - weighted);
        d_beta += d_logit * g.edge_weights[e];
        const double du = d_logit * (pre[e] > 0.0 ? 1.0 : cfg_.negative_slope);
        ds_src[i] += du;
        ds_dst[g.col_indices[e]] += du;
      }
    }
    edge_beta.grad(0, k) += d_beta;
    att_src.grad.row(k) += ds_src.transpose() * zk;
    att_dst.grad.row(k) += ds_dst.transpose() * zk;
    dzk += ds_src * att_src.value.row(k);
    dzk += ds_dst * att_dst.value.row(k);
  }
  weight.grad.noalias() += input_.transpose() * dz;
  return dz * weight.value.transpose();
}

void GatLayer::collect(ParameterRefs& out) {
  out.push_back(&weight);
  out.push_back(&att_src);
  out.push_back(&att_dst);
  out.push_back(&edge_beta);
  if (cfg_.bias) out.push_back(&bias);
}

}  // namespace civgraph::nn
