#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "civgraph/model/hybrid_model.hpp"

namespace civgraph::model {

inline constexpr std::string_view kCheckpointMagic = "MDL1";

/// MDL1 layout, little-endian:
///   "MDL1", u64 config length, config JSON,
///   u32 parameter count, then per tensor: u32 name length, name, u32 rows, u32 cols, rows*cols f32,
///   u32 buffer count, buffers in the same per-tensor layout.
std::string encode_checkpoint(HybridModel& model);
HybridModel decode_checkpoint(std::string_view bytes, const std::string& source = "<memory>");

void save_checkpoint(HybridModel& model, const std::filesystem::path& file);
HybridModel load_checkpoint(const std::filesystem::path& file);

}  // namespace civgraph::model
