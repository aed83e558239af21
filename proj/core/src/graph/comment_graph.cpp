#include "civgraph/graph/comment_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "civgraph/binary_io.hpp"
#include "civgraph/error.hpp"

namespace civgraph::graph {

float CommentGraph::weight(std::uint32_t i, std::uint32_t j) const {
  auto cols = neighbors(i);
  auto it = std::lower_bound(cols.begin(), cols.end(), j);
  if (it == cols.end() || *it != j) return std::numeric_limits<float>::quiet_NaN();
  return edge_weights[row_offsets[i] + static_cast<std::size_t>(it - cols.begin())];
}

void CommentGraph::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::internal, "invalid graph: " + what); };
  if (row_offsets.size() != std::size_t{n_nodes} + 1 || row_offsets.front() != 0) fail("bad row_offsets size");
  if (row_offsets.back() != col_indices.size() || col_indices.size() != edge_weights.size()) {
    fail("entry count mismatch");
  }
  if (!node_ids.empty() && node_ids.size() != n_nodes) fail("node_ids size mismatch");
  for (std::uint32_t i = 0; i < n_nodes; ++i) {
    if (row_offsets[i] > row_offsets[i + 1]) fail("row_offsets not monotone at " + std::to_string(i));
    auto cols = neighbors(i);
    bool has_self = false;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] >= n_nodes) fail("column out of range in row " + std::to_string(i));
      if (k > 0 && cols[k] <= cols[k - 1]) fail("unsorted or duplicate column in row " + std::to_string(i));
      const float w = weights(i)[k];
      if (!(w >= -1.0f && w <= 1.0f)) fail("weight outside [-1,1] in row " + std::to_string(i));
      if (cols[k] == i) {
        has_self = true;
        if (w != 1.0f) fail("self-loop weight != 1 at " + std::to_string(i));
      } else if (weight(cols[k], i) != w) {
        fail("asymmetric entry (" + std::to_string(i) + "," + std::to_string(cols[k]) + ")");
      }
    }
    if (!has_self) fail("missing self-loop at " + std::to_string(i));
  }
}

std::uint32_t count_components(const CommentGraph& g) {
  std::vector<std::uint32_t> parent(g.n_nodes);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::uint32_t components = g.n_nodes;
  for (std::uint32_t i = 0; i < g.n_nodes; ++i) {
    for (auto j : g.neighbors(i)) {
      auto a = find(i);
      auto b = find(j);
      if (a != b) {
        parent[std::max(a, b)] = std::min(a, b);
        --components;
      }
    }
  }
  return components;
}

GraphStats compute_stats(const CommentGraph& g, std::uint64_t fallback_edges) {
  GraphStats s;
  s.n_nodes = g.n_nodes;
  s.n_entries = g.n_entries();
  s.fallback_edges = fallback_edges;
  s.component_count = count_components(g);
  s.min_degree = g.n_nodes > 0 ? std::numeric_limits<std::uint32_t>::max() : 0;
  std::uint64_t directed = 0;
  for (std::uint32_t i = 0; i < g.n_nodes; ++i) {
    auto cols = g.neighbors(i);
    const auto self = static_cast<std::uint32_t>(std::count(cols.begin(), cols.end(), i));
    const auto degree = static_cast<std::uint32_t>(cols.size()) - self;
    directed += degree;
    s.min_degree = std::min(s.min_degree, degree);
    s.max_degree = std::max(s.max_degree, degree);
    ++s.degree_histogram[degree];
  }
  s.edge_count = directed / 2;
  return s;
}

std::string stats_to_json(const GraphStats& stats) {
  nlohmann::ordered_json j;
  j["n_nodes"] = stats.n_nodes;
  j["n_entries"] = stats.n_entries;
  j["edge_count"] = stats.edge_count;
  j["fallback_edge_count"] = stats.fallback_edges;
  j["component_count"] = stats.component_count;
  j["min_degree"] = stats.min_degree;
  j["max_degree"] = stats.max_degree;
  auto& hist = j["degree_histogram"] = nlohmann::ordered_json::object();
  for (const auto& [degree, count] : stats.degree_histogram) hist[std::to_string(degree)] = count;
  return j.dump(2) + "\n";
}

std::string encode_graph(const CommentGraph& g) {
  io::ByteWriter out;
  out.put_bytes(kGraphMagic);
  out.put<std::uint32_t>(g.n_nodes);
  out.put<std::uint64_t>(g.n_entries());
  for (auto off : g.row_offsets) out.put<std::uint64_t>(off);
  for (auto c : g.col_indices) out.put<std::uint32_t>(c);
  for (auto w : g.edge_weights) out.put<float>(w);
  if (g.node_ids.empty()) {
    for (std::uint32_t i = 0; i < g.n_nodes; ++i) out.put<std::uint64_t>(i);
  } else {
    for (auto id : g.node_ids) out.put<std::uint64_t>(id);
  }
  return out.bytes();
}

CommentGraph decode_graph(std::string_view bytes, const std::string& source) {
  io::ByteReader in(bytes, source);
  if (in.remaining() < 4 || in.get_bytes(4) != kGraphMagic) {
    throw Error(ErrorKind::bad_magic, source + ": not a GRF1 file (bad magic)");
  }
  CommentGraph g;
  g.n_nodes = in.get<std::uint32_t>();
  const auto entries = in.get<std::uint64_t>();
  const std::uint64_t nodes = g.n_nodes;
  if (entries > (std::numeric_limits<std::uint64_t>::max() / 2 - 16 * (nodes + 1)) / 8) {
    throw Error(ErrorKind::size_overflow, source + ": entry count overflows addressable size");
  }
  const std::uint64_t payload = 8 * (nodes + 1) + 8 * entries + 8 * nodes;
  if (in.remaining() < payload) {
    throw Error(ErrorKind::truncated, source + ": truncated payload (need " + std::to_string(payload) +
                                          " bytes, have " + std::to_string(in.remaining()) + ")");
  }
  g.row_offsets.resize(nodes + 1);
  for (auto& off : g.row_offsets) off = in.get<std::uint64_t>();
  g.col_indices.resize(entries);
  for (auto& c : g.col_indices) c = in.get<std::uint32_t>();
  g.edge_weights.resize(entries);
  for (auto& w : g.edge_weights) w = in.get<float>();
  g.node_ids.resize(nodes);
  for (auto& id : g.node_ids) id = in.get<std::uint64_t>();
  if (in.remaining() != 0) {
    throw Error(ErrorKind::format, source + ": " + std::to_string(in.remaining()) + " trailing bytes");
  }
  try {
    g.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::format, source + ": " + e.what());
  }
  return g;
}

void save_graph(const CommentGraph& g, const std::filesystem::path& file) {
  io::write_file_atomic(file, encode_graph(g));
}

CommentGraph load_graph(const std::filesystem::path& file) { return decode_graph(io::read_file(file), file.string()); }

CommentGraph permute(const CommentGraph& g, std::span<const std::uint32_t> perm) {
  if (perm.size() != g.n_nodes) throw Error(ErrorKind::shape_mismatch, "permutation size != node count");
  std::vector<std::vector<std::pair<std::uint32_t, float>>> rows(g.n_nodes);
  for (std::uint32_t i = 0; i < g.n_nodes; ++i) {
    auto cols = g.neighbors(i);
    auto ws = g.weights(i);
    for (std::size_t k = 0; k < cols.size(); ++k) rows[perm[i]].emplace_back(perm[cols[k]], ws[k]);
  }
  CommentGraph out;
  out.n_nodes = g.n_nodes;
  out.node_ids.resize(g.n_nodes);
  for (std::uint32_t i = 0; i < g.n_nodes; ++i) {
    out.node_ids[perm[i]] = g.node_ids.empty() ? i : g.node_ids[i];
  }
  for (auto& row : rows) {
    std::sort(row.begin(), row.end());
    for (auto [c, w] : row) {
      out.col_indices.push_back(c);
      out.edge_weights.push_back(w);
    }
    out.row_offsets.push_back(out.col_indices.size());
  }
  return out;
}

}  // namespace civgraph::graph
