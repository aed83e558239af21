#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <functional>

#include "civgraph/binary_io.hpp"
#include "civgraph/data/embeddings.hpp"
#include "civgraph/error.hpp"
#include "civgraph/rng.hpp"
#include "oracles.hpp"

namespace civgraph::data {
namespace {

EmbeddingMatrix random_matrix(std::uint32_t n, std::uint32_t d, std::uint64_t seed) {
  CounterRng rng(seed);
  EmbeddingMatrix m(n, d);
  for (auto& v : m.values) v = static_cast<float>(2.0 * rng.uniform() - 1.0);
  for (std::uint32_t i = 0; i < n; ++i) m.row_ids[i] = 1'000'000'000'000ULL + i * 13;
  return m;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::internal;
}

TEST(Emb1, SaveLoadFiveBy768IsBitIdentical) {
  testing::TempDir dir("emb");
  const auto m = random_matrix(5, 768, 1);
  save_embeddings(m, dir / "x.emb1");
  const auto back = load_embeddings(dir / "x.emb1");
  EXPECT_EQ(back, m);
  EXPECT_EQ(std::memcmp(back.values.data(), m.values.data(), m.values.size() * 4), 0);
}

TEST(Emb1, ByteLayout) {
  EmbeddingMatrix m(1, 2);
  m.row_ids[0] = 0x0102030405060708ULL;
  m.values = {1.0f, -2.0f};
  const auto bytes = encode_embeddings(m);
  ASSERT_EQ(bytes.size(), 4u + 4 + 4 + 8 + 8);
  EXPECT_EQ(bytes.substr(0, 4), "EMB1");
  EXPECT_EQ(bytes.substr(4, 4), std::string("\x01\0\0\0", 4));
  EXPECT_EQ(bytes.substr(8, 4), std::string("\x02\0\0\0", 4));
  EXPECT_EQ(bytes.substr(12, 8), std::string("\x08\x07\x06\x05\x04\x03\x02\x01", 8));
  EXPECT_EQ(bytes.substr(20, 4), std::string("\x00\x00\x80\x3F", 4));
}

TEST(Emb1, DistinctErrorsForMagicTruncationOverflow) {
  io::ByteWriter w;
  w.put_bytes("EMB1");
  w.put<std::uint32_t>(2);
  w.put<std::uint32_t>(3);
  w.put<std::uint64_t>(1);
  w.put<std::uint64_t>(2);
  for (int i = 0; i < 5; ++i) w.put<float>(0.5f);  // header says 6 floats
  EXPECT_EQ(kind_of([&] { decode_embeddings(w.bytes()); }), ErrorKind::truncated);

  EXPECT_EQ(kind_of([] { decode_embeddings(std::string("EMX1\0\0\0\0\0\0\0\0", 12)); }), ErrorKind::bad_magic);

  io::ByteWriter huge;
  huge.put_bytes("EMB1");
  huge.put<std::uint32_t>(0xFFFFFFFFu);
  huge.put<std::uint32_t>(0xFFFFFFFFu);
  EXPECT_EQ(kind_of([&] { decode_embeddings(huge.bytes()); }), ErrorKind::size_overflow);

  auto extra = encode_embeddings(random_matrix(2, 2, 4));
  extra.push_back('\0');
  EXPECT_EQ(kind_of([&] { decode_embeddings(extra); }), ErrorKind::format);
}

TEST(Emb1, AcceptsFileWrittenByIndependentWriter) {
  // written with Python struct: ids 4000 + 11 i, rows cos(0.3 i + k) normalized
  const auto m = load_embeddings(std::string(CIVGRAPH_FIXTURE_DIR) + "/five_comments.emb1");
  ASSERT_EQ(m.n_rows, 5u);
  ASSERT_EQ(m.dim, 4u);
  for (std::uint32_t i = 0; i < 5; ++i) {
    EXPECT_EQ(m.row_ids[i], 4000u + 11 * i);
    double norm = 0;
    for (std::uint32_t k = 0; k < 4; ++k) norm += std::cos(0.3 * i + k) * std::cos(0.3 * i + k);
    for (std::uint32_t k = 0; k < 4; ++k) {
      EXPECT_EQ(m.row(i)[k], static_cast<float>(std::cos(0.3 * i + k) / std::sqrt(norm)));
    }
  }
  EXPECT_LE(max_norm_deviation(m), 1e-3);
  EXPECT_EQ(encode_embeddings(m), testing::read_text(std::string(CIVGRAPH_FIXTURE_DIR) + "/five_comments.emb1"));
}

TEST(L2Normalize, ThreeFourFive) {
  EmbeddingMatrix m(1, 4);
  m.values = {3.0f, 4.0f, 0.0f, 0.0f};
  const auto n = l2_normalize(m);
  EXPECT_FLOAT_EQ(n.values[0], 0.6f);
  EXPECT_FLOAT_EQ(n.values[1], 0.8f);
  EXPECT_EQ(n.values[2], 0.0f);
}

TEST(L2Normalize, IdempotentOnUnitRows) {
  const auto once = l2_normalize(random_matrix(20, 16, 2));
  const auto twice = l2_normalize(once);
  for (std::size_t i = 0; i < once.values.size(); ++i) EXPECT_NEAR(once.values[i], twice.values[i], 1e-7);
}

TEST(L2Normalize, RandomRowsHaveUnitNormRecomputedIndependently) {
  const auto m = l2_normalize(random_matrix(50, 33, 3));
  for (std::uint32_t i = 0; i < m.n_rows; ++i) {
    long double s = 0;
    for (float v : m.row(i)) s += static_cast<long double>(v) * v;
    EXPECT_NEAR(static_cast<double>(std::sqrt(s)), 1.0, 1e-6);
  }
  EXPECT_LE(max_norm_deviation(m), 1e-6);
  for (std::uint32_t i = 0; i < m.n_rows; ++i) {
    for (std::uint32_t j = 0; j < m.n_rows; ++j) {
      double dot = 0;
      for (std::uint32_t k = 0; k < m.dim; ++k) dot += double(m.row(i)[k]) * m.row(j)[k];
      EXPECT_LE(std::abs(dot), 1.0 + 1e-6);
    }
  }
}

TEST(L2Normalize, ZeroRowErrorListsIndex) {
  auto m = random_matrix(4, 3, 5);
  std::fill_n(m.values.begin() + 6, 3, 0.0f);
  try {
    l2_normalize(m);
    FAIL() << "expected error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
}

TEST(Select, ReordersAndRejectsUnknownIds) {
  const auto m = random_matrix(4, 3, 6);
  const std::vector<CommentId> ids = {m.row_ids[2], m.row_ids[0]};
  const auto s = m.select(ids);
  EXPECT_EQ(s.row_ids, ids);
  EXPECT_TRUE(std::equal(s.row(0).begin(), s.row(0).end(), m.row(2).begin()));
  const std::vector<CommentId> bad = {12345};
  EXPECT_THROW(m.select(bad), Error);
}

}  // namespace
}  // namespace civgraph::data
