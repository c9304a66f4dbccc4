#pragma once

#include <cstdint>
#include <string>

#include "fns/train.hpp"

namespace fns {

/// Binary layout (little-endian): "FNS1", u32 version, i32 n, i32 dim,
/// model spec fields, u64 epoch, f64 loss, u32 segment count, then per
/// segment u32 name length, name bytes, u64 value count, f64 values.
struct Checkpoint {
  Grid grid;
  ModelSpec spec;
  std::uint64_t epoch = 0;
  double loss = 0.0;
  ParamVector params;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Checkpoint& c);
/// Throws CorruptCheckpoint (bad magic, truncation, trailing bytes, bad
/// tags) or VersionMismatch.
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace fns
