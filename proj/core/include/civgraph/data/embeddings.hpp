#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "civgraph/data/corpus.hpp"

namespace civgraph::data {

/// Row-major N x d matrix of binary32 comment embeddings.
struct EmbeddingMatrix {
  std::uint32_t n_rows = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;
  std::vector<CommentId> row_ids;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::uint32_t rows, std::uint32_t cols)
      : n_rows(rows), dim(cols), values(std::size_t{rows} * cols, 0.0f), row_ids(rows, 0) {}

  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::span<float> row(std::size_t i) { return {values.data() + i * dim, dim}; }

  /// Rows selected by comment id, in the given order.
  EmbeddingMatrix select(std::span<const CommentId> ids) const;

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

inline constexpr std::string_view kEmbeddingMagic = "EMB1";

std::string encode_embeddings(const EmbeddingMatrix& m);
EmbeddingMatrix decode_embeddings(std::string_view bytes, const std::string& source = "<memory>");

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& file);
EmbeddingMatrix load_embeddings(const std::filesystem::path& file);

/// Divides each row by its L2 norm (accumulated in double).
EmbeddingMatrix l2_normalize(const EmbeddingMatrix& m);

/// Largest |norm - 1| over all rows.
double max_norm_deviation(const EmbeddingMatrix& m);

}  // namespace civgraph::data
