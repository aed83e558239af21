#include "civgraph/model/checkpoint.hpp"

#include <cmath>

#include "civgraph/binary_io.hpp"
#include "civgraph/error.hpp"

namespace civgraph::model {

namespace {

void put_tensor(io::ByteWriter& out, const std::string& name, const Matrix& m) {
  out.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
  out.put_bytes(name);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
  for (nn::Index i = 0; i < m.size(); ++i) out.put<float>(static_cast<float>(m.data()[i]));
}

void get_tensor(io::ByteReader& in, const std::string& expected_name, Matrix& m) {
  const auto name_len = in.get<std::uint32_t>();
  const std::string name(in.get_bytes(name_len));
  if (name != expected_name) {
    throw Error(ErrorKind::format, in.source() + ": tensor '" + name + "' where '" + expected_name + "' was expected");
  }
  const auto rows = in.get<std::uint32_t>();
  const auto cols = in.get<std::uint32_t>();
  if (rows != m.rows() || cols != m.cols()) {
    throw Error(ErrorKind::shape_mismatch, in.source() + ": tensor '" + name + "' is " + std::to_string(rows) + "x" +
                                               std::to_string(cols) + ", config implies " +
                                               std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  in.require(std::size_t{4} * rows * cols);
  for (nn::Index i = 0; i < m.size(); ++i) {
    const float v = in.get<float>();
    if (!std::isfinite(v)) throw Error(ErrorKind::format, in.source() + ": non-finite value in '" + name + "'");
    m.data()[i] = v;
  }
}

}  // namespace

std::string encode_checkpoint(HybridModel& model) {
  io::ByteWriter out;
  out.put_bytes(kCheckpointMagic);
  const std::string config = to_json(model.config());
  out.put<std::uint64_t>(config.size());
  out.put_bytes(config);
  const auto params = model.parameters();
  out.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) put_tensor(out, p->name, p->value);
  const auto buffers = model.buffers();
  out.put<std::uint32_t>(static_cast<std::uint32_t>(buffers.size()));
  for (const auto& b : buffers) put_tensor(out, b.name, *b.value);
  return out.bytes();
}

HybridModel decode_checkpoint(std::string_view bytes, const std::string& source) {
  io::ByteReader in(bytes, source);
  if (in.remaining() < 4 || in.get_bytes(4) != kCheckpointMagic) {
    throw Error(ErrorKind::bad_magic, source + ": not an MDL1 file (bad magic)");
  }
  const auto config_len = in.get<std::uint64_t>();
  if (config_len > in.remaining()) {
    throw Error(ErrorKind::truncated, source + ": config length " + std::to_string(config_len) + " exceeds payload");
  }
  HybridModel model(model_config_from_json(std::string(in.get_bytes(config_len))));

  const auto params = model.parameters();
  const auto n_params = in.get<std::uint32_t>();
  if (n_params != params.size()) {
    throw Error(ErrorKind::shape_mismatch, source + ": " + std::to_string(n_params) + " parameters, config implies " +
                                               std::to_string(params.size()));
  }
  for (auto* p : params) get_tensor(in, p->name, p->value);

  const auto buffers = model.buffers();
  const auto n_buffers = in.get<std::uint32_t>();
  if (n_buffers != buffers.size()) {
    throw Error(ErrorKind::shape_mismatch, source + ": " + std::to_string(n_buffers) + " buffers, config implies " +
                                               std::to_string(buffers.size()));
  }
  for (const auto& b : buffers) get_tensor(in, b.name, *b.value);
  if (in.remaining() != 0) {
    throw Error(ErrorKind::format, source + ": " + std::to_string(in.remaining()) + " trailing bytes");
  }
  return model;
}

void save_checkpoint(HybridModel& model, const std::filesystem::path& file) {
  io::write_file_atomic(file, encode_checkpoint(model));
}

HybridModel load_checkpoint(const std::filesystem::path& file) {
  return decode_checkpoint(io::read_file(file), file.string());
}

}  // namespace civgraph::model
