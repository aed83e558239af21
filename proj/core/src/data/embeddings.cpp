#include "civgraph/data/embeddings.hpp"

#include <cmath>
#include <limits>

#include "civgraph/binary_io.hpp"
#include "civgraph/error.hpp"

namespace civgraph::data {

EmbeddingMatrix EmbeddingMatrix::select(std::span<const CommentId> ids) const {
  std::unordered_map<CommentId, std::size_t> index;
  index.reserve(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) index.emplace(row_ids[i], i);

  EmbeddingMatrix out(static_cast<std::uint32_t>(ids.size()), dim);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    auto it = index.find(ids[r]);
    if (it == index.end()) {
      throw Error(ErrorKind::invalid_argument, "no embedding row for comment id " + std::to_string(ids[r]));
    }
    auto src = row(it->second);
    std::copy(src.begin(), src.end(), out.row(r).begin());
    out.row_ids[r] = ids[r];
  }
  return out;
}

std::string encode_embeddings(const EmbeddingMatrix& m) {
  if (m.values.size() != std::size_t{m.n_rows} * m.dim || m.row_ids.size() != m.n_rows) {
    throw Error(ErrorKind::shape_mismatch, "embedding matrix buffers disagree with its header");
  }
  io::ByteWriter out;
  out.put_bytes(kEmbeddingMagic);
  out.put<std::uint32_t>(m.n_rows);
  out.put<std::uint32_t>(m.dim);
  for (auto id : m.row_ids) out.put<std::uint64_t>(id);
  for (auto v : m.values) out.put<float>(v);
  return out.bytes();
}

EmbeddingMatrix decode_embeddings(std::string_view bytes, const std::string& source) {
  io::ByteReader in(bytes, source);
  if (in.remaining() < 4 || in.get_bytes(4) != kEmbeddingMagic) {
    throw Error(ErrorKind::bad_magic, source + ": not an EMB1 file (bad magic)");
  }
  EmbeddingMatrix m;
  m.n_rows = in.get<std::uint32_t>();
  m.dim = in.get<std::uint32_t>();

  constexpr std::uint64_t kMaxBytes = std::numeric_limits<std::uint64_t>::max() / 2;
  const std::uint64_t cells = std::uint64_t{m.n_rows} * m.dim;
  if (cells > (kMaxBytes - 8 * std::uint64_t{m.n_rows}) / 4 ||
      cells * 4 + 8 * std::uint64_t{m.n_rows} > std::numeric_limits<std::size_t>::max() / 2) {
    throw Error(ErrorKind::size_overflow, source + ": N*d = " + std::to_string(m.n_rows) + "*" +
                                              std::to_string(m.dim) + " overflows the addressable size");
  }
  const std::uint64_t payload = 8 * std::uint64_t{m.n_rows} + 4 * cells;
  if (in.remaining() < payload) {
    throw Error(ErrorKind::truncated, source + ": truncated payload (header declares " + std::to_string(m.n_rows) +
                                          "x" + std::to_string(m.dim) + ", need " + std::to_string(payload) +
                                          " bytes, have " + std::to_string(in.remaining()) + ")");
  }
  if (in.remaining() > payload) {
    throw Error(ErrorKind::format, source + ": " + std::to_string(in.remaining() - payload) + " trailing bytes");
  }
  m.row_ids.resize(m.n_rows);
  for (auto& id : m.row_ids) id = in.get<std::uint64_t>();
  m.values.resize(cells);
  for (auto& v : m.values) v = in.get<float>();
  return m;
}

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& file) {
  io::write_file_atomic(file, encode_embeddings(m));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& file) {
  return decode_embeddings(io::read_file(file), file.string());
}

EmbeddingMatrix l2_normalize(const EmbeddingMatrix& m) {
  EmbeddingMatrix out = m;
  for (std::size_t i = 0; i < m.n_rows; ++i) {
    double sq = 0.0;
    for (float v : m.row(i)) sq += static_cast<double>(v) * v;
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorKind::numeric, "row " + std::to_string(i) + " has zero or non-finite norm");
    }
    auto dst = out.row(i);
    auto src = m.row(i);
    for (std::size_t k = 0; k < m.dim; ++k) dst[k] = static_cast<float>(src[k] / norm);
  }
  return out;
}

double max_norm_deviation(const EmbeddingMatrix& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.n_rows; ++i) {
    double sq = 0.0;
    for (float v : m.row(i)) sq += static_cast<double>(v) * v;
    worst = std::max(worst, std::abs(std::sqrt(sq) - 1.0));
  }
  return worst;
}

}  // namespace civgraph::data
