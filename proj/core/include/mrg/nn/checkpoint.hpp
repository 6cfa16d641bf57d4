#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "mrg/nn/params.hpp"

namespace mrg::nn {

/// Binary layout (all integers little-endian):
///   "MRGCKPT\0" | u32 version | dims | u64 vocab hash |
///   u32 metadata length + JSON bytes |
///   u32 tensor count | per tensor: u32 name length, name, u32 rows, u32 cols |
///   tensor data as f32, in table order.
struct Checkpoint {
  ParameterStore<float> params;
  std::uint64_t vocab_hash = 0;
  std::string metadata_json = "{}";
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mrg::nn
