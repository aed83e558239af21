#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "civgraph/data/corpus.hpp"

namespace civgraph::graph {

/// Undirected weighted similarity graph in compressed sparse row form.
/// Every node carries a weight-1 self-loop; neighbor lists are sorted by
/// column index and free of duplicates.
struct CommentGraph {
  std::uint32_t n_nodes = 0;
  std::vector<std::uint64_t> row_offsets{0};
  std::vector<std::uint32_t> col_indices;
  std::vector<float> edge_weights;
  std::vector<data::CommentId> node_ids;

  std::uint64_t n_entries() const noexcept { return col_indices.size(); }

  std::span<const std::uint32_t> neighbors(std::uint32_t node) const {
    return {col_indices.data() + row_offsets[node], col_indices.data() + row_offsets[node + 1]};
  }
  std::span<const float> weights(std::uint32_t node) const {
    return {edge_weights.data() + row_offsets[node], edge_weights.data() + row_offsets[node + 1]};
  }

  /// Weight of (i, j), or NaN when the entry is absent.
  float weight(std::uint32_t i, std::uint32_t j) const;

  /// Structural checks: offsets, sorted unique columns, symmetry, self-loops.
  void validate() const;

  friend bool operator==(const CommentGraph&, const CommentGraph&) = default;
};

struct GraphStats {
  std::uint32_t n_nodes = 0;
  std::uint64_t n_entries = 0;       // stored CSR entries, self-loops included
  std::uint64_t edge_count = 0;      // undirected non-self-loop edges
  std::uint64_t fallback_edges = 0;  // undirected edges contributed only by the k_min fallback
  std::uint32_t component_count = 0;
  std::uint32_t min_degree = 0;      // excluding self-loops
  std::uint32_t max_degree = 0;
  std::map<std::uint32_t, std::uint64_t> degree_histogram;  // degree -> node count
};

GraphStats compute_stats(const CommentGraph& g, std::uint64_t fallback_edges = 0);
std::uint32_t count_components(const CommentGraph& g);

std::string stats_to_json(const GraphStats& stats);

inline constexpr std::string_view kGraphMagic = "GRF1";

std::string encode_graph(const CommentGraph& g);
CommentGraph decode_graph(std::string_view bytes, const std::string& source = "<memory>");
void save_graph(const CommentGraph& g, const std::filesystem::path& file);
CommentGraph load_graph(const std::filesystem::path& file);

/// Returns a copy with node i relabeled to perm[i].
CommentGraph permute(const CommentGraph& g, std::span<const std::uint32_t> perm);

}  // namespace civgraph::graph
