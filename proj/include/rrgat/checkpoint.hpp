#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "rrgat/tensor.hpp"

namespace rrgat {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::string config_json;  // opaque to this layer
  std::map<std::string, TensorPtr> tensors;
};

// Binary container: magic, version, config block, then named tensors as
// (name, shape, raw little-endian float64). Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const std::string& config_json,
                     const std::map<std::string, TensorPtr>& tensors);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace rrgat
