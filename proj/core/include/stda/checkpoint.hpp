#pragma once

// Binary checkpoint, little-endian:
//   "STDACKP1" | u32 version | u32 n + network config text | u64 step |
//   u32 tensor count | per tensor: u32 n + name, u32 ndim, u64 dims, f32 data

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "stda/network.hpp"

namespace stda {

struct Checkpoint {
  NetworkConfig network;
  uint64_t step = 0;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;
};

void save_checkpoint(const std::filesystem::path& path, const DeblurModel<float>& model, uint64_t step);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint tensors into a model; the network configs must match.
void apply_checkpoint(const Checkpoint& ckpt, DeblurModel<float>& model);

/// Builds a model from the checkpoint's own config. When `expected` is given
/// the stored config must equal it.
DeblurModel<float> load_model(const std::filesystem::path& path, const NetworkConfig* expected = nullptr);

}  // namespace stda
