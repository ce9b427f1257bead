#pragma once

// Flat "key = value" run configuration. Lines starting with '#' are comments;
// unknown keys are errors.

#include <cstdint>
#include <filesystem>
#include <string>

#include "stda/losses.hpp"
#include "stda/network.hpp"

namespace stda {

struct OptimizerConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct RunConfig {
  NetworkConfig network;
  LossConfig loss;
  OptimizerConfig optimizer;
  int batch_size = 2;
  int64_t crop_size = 64;
  int64_t iterations = 2000;
  uint64_t seed = 0;
  std::string dataset_root;
  std::string split = "train";
  std::string checkpoint_dir;
  int64_t checkpoint_every = 0;  // 0: only the final checkpoint
  std::string log_file;
  bool augment = true;
  int warp_border = 2;  // feature pixels excluded from the warp loss

  void validate() const;
  /// Applies one key; throws std::invalid_argument on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  std::string to_text() const;

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
};

/// Canonical text of the network section, used to tag checkpoints.
std::string network_text(const NetworkConfig& cfg);
NetworkConfig parse_network_text(const std::string& text);

}  // namespace stda
