#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "civgraph/data/embeddings.hpp"
#include "civgraph/graph/comment_graph.hpp"

namespace civgraph::graph {

struct GraphConfig {
  double tau = 0.9;            // strict threshold: s_ij > tau
  std::uint32_t k_min = 5;     // minimum non-self neighbors per node
  std::uint32_t block_size = 1024;
  std::uint32_t threads = 1;

  void validate(std::size_t n_nodes) const;
};

struct Edge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  double weight = 0.0;
  bool fallback = false;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Dense tile of cosine similarities for rows [row_begin, row_end) against
/// columns [col_begin, col_end).
struct SimilarityBlock {
  std::size_t row_begin = 0;
  std::size_t row_end = 0;
  std::size_t col_begin = 0;
  std::size_t col_end = 0;
  std::vector<double> values;

  std::size_t cols() const noexcept { return col_end - col_begin; }
  double at(std::size_t i, std::size_t j) const { return values[(i - row_begin) * cols() + (j - col_begin)]; }
};

/// Inner product of two rows, accumulated in double in index order, then
/// clamped to [-1, 1]. Every similarity in this module goes through here.
double cosine(std::span<const float> a, std::span<const float> b) noexcept;

/// Rejects inputs whose row norms deviate from 1 by more than 1e-3.
void require_normalized(const data::EmbeddingMatrix& m);

SimilarityBlock pairwise_similarity_block(const data::EmbeddingMatrix& m, std::size_t row_begin, std::size_t row_end);
SimilarityBlock pairwise_similarity_block(const data::EmbeddingMatrix& m, std::size_t row_begin, std::size_t row_end,
                                          std::size_t col_begin, std::size_t col_end);

/// Directed edges (i, j, s_ij) with i != j and s_ij > tau.
std::vector<Edge> threshold_edges(const SimilarityBlock& block, double tau);

/// Nodes with fewer than k_min threshold neighbors are linked to their
/// k_min most similar other nodes (ties toward the lower index); the added
/// edges are flagged as fallback. Other nodes are left untouched.
std::vector<Edge> ensure_min_connectivity(std::vector<Edge> edges, const data::EmbeddingMatrix& m,
                                          std::uint32_t k_min);

/// Symmetrizes, deduplicates (max weight wins), adds weight-1 self-loops
/// and packs into CSR. `tau` only steers the binary32 rounding of
/// threshold weights (see store_weight).
CommentGraph finalize_graph(std::span<const Edge> edges, std::uint32_t n_nodes,
                            std::vector<data::CommentId> node_ids = {}, double tau = 1.0);

/// Threshold weights are stored as binary32; a value that would round onto
/// or below tau is nudged up one ulp so stored weights stay in (tau, 1].
float store_weight(double similarity, double tau, bool fallback) noexcept;

struct GraphBuild {
  CommentGraph graph;
  GraphStats stats;
};

GraphBuild build_graph(const data::EmbeddingMatrix& m, const GraphConfig& cfg);

}  // namespace civgraph::graph
