#pragma once

#include <filesystem>
#include <optional>

#include "dualteacher/tensor.hpp"

namespace dt {

// Flat parameter checkpoint, little-endian:
//   "DTCK" | version u32 | tensor count u32 |
//   per tensor: name length u32, UTF-8 name, rank u32, extents u64[rank], f32 data
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params);
ParamSet load_checkpoint(const std::filesystem::path& path);

}  // namespace dt
