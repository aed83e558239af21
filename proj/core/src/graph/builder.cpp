#include "civgraph/graph/builder.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "civgraph/error.hpp"

namespace civgraph::graph {

namespace {

struct Candidate {
  double sim;
  std::uint32_t idx;
};

// Higher similarity first; equal similarity prefers the lower index.
bool ranks_before(const Candidate& a, const Candidate& b) {
  return a.sim > b.sim || (a.sim == b.sim && a.idx < b.idx);
}

// Bounded best-k list kept sorted by ranks_before.
class TopK {
 public:
  explicit TopK(std::uint32_t k) : k_(k) { items_.reserve(k); }

  void offer(Candidate c) {
    if (items_.size() == k_ && !ranks_before(c, items_.back())) return;
    auto pos = std::upper_bound(items_.begin(), items_.end(), c, ranks_before);
    items_.insert(pos, c);
    if (items_.size() > k_) items_.pop_back();
  }

  const std::vector<Candidate>& items() const noexcept { return items_; }

 private:
  std::uint32_t k_;
  std::vector<Candidate> items_;
};

void fill_tile(const data::EmbeddingMatrix& m, SimilarityBlock& block) {
  block.values.resize((block.row_end - block.row_begin) * block.cols());
  std::size_t out = 0;
  for (std::size_t i = block.row_begin; i < block.row_end; ++i) {
    const auto xi = m.row(i);
    for (std::size_t j = block.col_begin; j < block.col_end; ++j) block.values[out++] = cosine(xi, m.row(j));
  }
}

std::vector<Candidate> top_k_for(const data::EmbeddingMatrix& m, std::uint32_t node, std::uint32_t k) {
  TopK best(k);
  const auto xi = m.row(node);
  for (std::uint32_t j = 0; j < m.n_rows; ++j) {
    if (j != node) best.offer({cosine(xi, m.row(j)), j});
  }
  return best.items();
}

std::uint64_t count_fallback_pairs(std::span<const Edge> edges) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> threshold_pairs;
  for (const auto& e : edges) {
    if (e.src == e.dst) continue;
    auto key = std::minmax(e.src, e.dst);
    (e.fallback ? pairs : threshold_pairs).emplace_back(key.first, key.second);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  std::sort(threshold_pairs.begin(), threshold_pairs.end());
  std::uint64_t count = 0;
  for (const auto& p : pairs) {
    if (!std::binary_search(threshold_pairs.begin(), threshold_pairs.end(), p)) ++count;
  }
  return count;
}

// Threshold edges and best-k candidates for a contiguous row range.
struct RowRangeScan {
  std::vector<Edge> edges;
  std::vector<TopK> best;
};

RowRangeScan scan_rows(const data::EmbeddingMatrix& m, std::size_t row_begin, std::size_t row_end,
                       const GraphConfig& cfg) {
  RowRangeScan scan;
  scan.best.assign(row_end - row_begin, TopK(cfg.k_min));
  SimilarityBlock tile;
  tile.row_begin = row_begin;
  tile.row_end = row_end;
  for (std::size_t col = 0; col < m.n_rows; col += cfg.block_size) {
    tile.col_begin = col;
    tile.col_end = std::min<std::size_t>(m.n_rows, col + cfg.block_size);
    fill_tile(m, tile);
    for (std::size_t i = row_begin; i < row_end; ++i) {
      auto& best = scan.best[i - row_begin];
      for (std::size_t j = tile.col_begin; j < tile.col_end; ++j) {
        if (i == j) continue;
        const double s = tile.at(i, j);
        if (s > cfg.tau) {
          scan.edges.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), s, false});
        }
        best.offer({s, static_cast<std::uint32_t>(j)});
      }
    }
  }
  return scan;
}

}  // namespace

void GraphConfig::validate(std::size_t n_nodes) const {
  if (!(tau > -1.0 && tau <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "tau must lie in (-1, 1], got " + std::to_string(tau));
  }
  if (k_min == 0) throw Error(ErrorKind::invalid_argument, "k_min must be positive");
  if (k_min >= n_nodes) {
    throw Error(ErrorKind::invalid_argument, "k_min (" + std::to_string(k_min) + ") must be below the node count (" +
                                                 std::to_string(n_nodes) + ")");
  }
  if (block_size == 0) throw Error(ErrorKind::invalid_argument, "block_size must be positive");
}

double cosine(std::span<const float> a, std::span<const float> b) noexcept {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  return std::clamp(acc, -1.0, 1.0);
}

void require_normalized(const data::EmbeddingMatrix& m) {
  for (std::size_t i = 0; i < m.n_rows; ++i) {
    double sq = 0.0;
    for (float v : m.row(i)) sq += static_cast<double>(v) * v;
    if (!(std::abs(std::sqrt(sq) - 1.0) <= 1e-3)) {
      throw Error(ErrorKind::invalid_argument,
                  "embedding row " + std::to_string(i) + " is not unit-normalized (norm " +
                      std::to_string(std::sqrt(sq)) + ")");
    }
  }
}

SimilarityBlock pairwise_similarity_block(const data::EmbeddingMatrix& m, std::size_t row_begin, std::size_t row_end) {
  return pairwise_similarity_block(m, row_begin, row_end, 0, m.n_rows);
}

SimilarityBlock pairwise_similarity_block(const data::EmbeddingMatrix& m, std::size_t row_begin, std::size_t row_end,
                                          std::size_t col_begin, std::size_t col_end) {
  if (row_begin > row_end || row_end > m.n_rows || col_begin > col_end || col_end > m.n_rows) {
    throw Error(ErrorKind::invalid_argument, "similarity block range out of bounds");
  }
  require_normalized(m);
  SimilarityBlock block{row_begin, row_end, col_begin, col_end, {}};
  fill_tile(m, block);
  return block;
}

std::vector<Edge> threshold_edges(const SimilarityBlock& block, double tau) {
  std::vector<Edge> edges;
  for (std::size_t i = block.row_begin; i < block.row_end; ++i) {
    for (std::size_t j = block.col_begin; j < block.col_end; ++j) {
      const double s = block.at(i, j);
      if (i != j && s > tau) {
        edges.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), s, false});
      }
    }
  }
  return edges;
}

std::vector<Edge> ensure_min_connectivity(std::vector<Edge> edges, const data::EmbeddingMatrix& m,
                                          std::uint32_t k_min) {
  if (k_min >= m.n_rows) throw Error(ErrorKind::invalid_argument, "k_min must be below the node count");
  std::vector<std::uint32_t> threshold_degree(m.n_rows, 0);
  for (const auto& e : edges) {
    if (e.src >= m.n_rows || e.dst >= m.n_rows) throw Error(ErrorKind::invalid_argument, "edge endpoint out of range");
    if (!e.fallback && e.src != e.dst) ++threshold_degree[e.src];
  }
  std::vector<bool> deficient(m.n_rows, false);
  for (std::uint32_t i = 0; i < m.n_rows; ++i) deficient[i] = threshold_degree[i] < k_min;

  // A deficient node's neighbor set becomes its top-k list, which already
  // contains every above-threshold neighbor.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> kept_threshold;
  for (const auto& e : edges) {
    if (deficient[e.src] && !e.fallback) kept_threshold.emplace_back(e.src, e.dst);
  }
  std::sort(kept_threshold.begin(), kept_threshold.end());
  std::erase_if(edges, [&](const Edge& e) { return deficient[e.src]; });
  for (std::uint32_t i = 0; i < m.n_rows; ++i) {
    if (!deficient[i]) continue;
    for (const auto& c : top_k_for(m, i, k_min)) {
      const bool was_threshold = std::binary_search(kept_threshold.begin(), kept_threshold.end(), std::pair{i, c.idx});
      edges.push_back({i, c.idx, c.sim, !was_threshold});
    }
  }
  return edges;
}

float store_weight(double similarity, double tau, bool fallback) noexcept {
  const double s = std::clamp(similarity, -1.0, 1.0);
  auto w = static_cast<float>(s);
  if (!fallback && s > tau && static_cast<double>(w) <= tau && w < 1.0f) w = std::nextafter(w, 2.0f);
  return w;
}

namespace {

CommentGraph pack(std::span<const Edge> edges, std::uint32_t n_nodes, std::vector<data::CommentId> node_ids,
                  double tau) {
  struct Entry {
    std::uint32_t src, dst;
    double weight;
    bool fallback;
  };
  std::vector<Entry> entries;
  entries.reserve(2 * edges.size() + n_nodes);
  for (const auto& e : edges) {
    if (e.src >= n_nodes || e.dst >= n_nodes) throw Error(ErrorKind::invalid_argument, "edge endpoint out of range");
    if (e.src == e.dst) continue;
    entries.push_back({e.src, e.dst, e.weight, e.fallback});
    entries.push_back({e.dst, e.src, e.weight, e.fallback});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.src != b.src) return a.src < b.src;
    if (a.dst != b.dst) return a.dst < b.dst;
    return a.weight > b.weight;
  });

  CommentGraph g;
  g.n_nodes = n_nodes;
  g.node_ids = std::move(node_ids);
  if (g.node_ids.empty()) {
    g.node_ids.resize(n_nodes);
    for (std::uint32_t i = 0; i < n_nodes; ++i) g.node_ids[i] = i;
  }
  if (g.node_ids.size() != n_nodes) throw Error(ErrorKind::shape_mismatch, "node_ids size != node count");
  g.row_offsets.assign(1, 0);
  g.col_indices.reserve(entries.size() + n_nodes);
  g.edge_weights.reserve(entries.size() + n_nodes);
  std::size_t k = 0;
  for (std::uint32_t i = 0; i < n_nodes; ++i) {
    bool self_done = false;
    auto emit_self = [&] {
      g.col_indices.push_back(i);
      g.edge_weights.push_back(1.0f);
      self_done = true;
    };
    while (k < entries.size() && entries[k].src == i) {
      const auto& e = entries[k];
      if (!self_done && e.dst > i) emit_self();
      g.col_indices.push_back(e.dst);
      g.edge_weights.push_back(store_weight(e.weight, tau, e.fallback));
      // the first entry of a (src,dst) run carries the max weight
      const auto dst = e.dst;
      while (k < entries.size() && entries[k].src == i && entries[k].dst == dst) ++k;
    }
    if (!self_done) emit_self();
    g.row_offsets.push_back(g.col_indices.size());
  }
  return g;
}

}  // namespace

CommentGraph finalize_graph(std::span<const Edge> edges, std::uint32_t n_nodes, std::vector<data::CommentId> node_ids,
                            double tau) {
  return pack(edges, n_nodes, std::move(node_ids), tau);
}

GraphBuild build_graph(const data::EmbeddingMatrix& m, const GraphConfig& cfg) {
  cfg.validate(m.n_rows);
  require_normalized(m);

  const std::size_t n = m.n_rows;
  const std::size_t n_blocks = (n + cfg.block_size - 1) / cfg.block_size;
  std::vector<RowRangeScan> scans(n_blocks);
  auto work = [&](std::size_t first) {
    for (std::size_t b = first; b < n_blocks; b += std::max<std::uint32_t>(1, cfg.threads)) {
      const std::size_t begin = b * cfg.block_size;
      scans[b] = scan_rows(m, begin, std::min(n, begin + cfg.block_size), cfg);
    }
  };
  if (cfg.threads <= 1 || n_blocks == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::uint32_t t = 0; t < cfg.threads; ++t) pool.emplace_back(work, t);
  }

  // Merge in block order so the result is independent of the schedule.
  std::vector<Edge> edges;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const std::size_t begin = b * cfg.block_size;
    auto& scan = scans[b];
    std::vector<std::uint32_t> degree(scan.best.size(), 0);
    for (const auto& e : scan.edges) ++degree[e.src - begin];
    for (const auto& e : scan.edges) {
      if (degree[e.src - begin] >= cfg.k_min) edges.push_back(e);
    }
    for (std::size_t r = 0; r < scan.best.size(); ++r) {
      if (degree[r] >= cfg.k_min) continue;
      for (const auto& c : scan.best[r].items()) {
        edges.push_back({static_cast<std::uint32_t>(begin + r), c.idx, c.sim, !(c.sim > cfg.tau)});
      }
    }
    scan = {};
  }

  GraphBuild out;
  out.graph = pack(edges, m.n_rows, m.row_ids, cfg.tau);
  out.stats = compute_stats(out.graph, count_fallback_pairs(edges));
  return out;
}

}  // namespace civgraph::graph
