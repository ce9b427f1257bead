#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "stda/gmacs.hpp"
#include "stda/trainer.hpp"

namespace stda::tools {

struct SynthOptions {
  std::filesystem::path spec;
  std::filesystem::path out;
};

struct TrainOptions {
  std::filesystem::path config;
  std::optional<int64_t> iterations;
};

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path dataset;
  std::string split;
  std::optional<std::filesystem::path> config;  // network section must match the checkpoint
};

struct InferOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path frames;
  std::filesystem::path out;
  bool stack = false;
  bool dump_attention = false;
};

struct GmacsOptions {
  std::optional<std::filesystem::path> config;
  NetworkConfig network;
  int64_t height = 64;
  int64_t width = 64;
};

std::vector<ManifestEntry> run_synth(const SynthOptions& opts, std::ostream& out);
std::vector<StepRecord> run_train(const TrainOptions& opts, std::ostream& out);
EvalReport run_eval(const EvalOptions& opts, std::ostream& out);
/// Returns the number of frames written.
int run_infer(const InferOptions& opts, std::ostream& out);
MacReport run_gmacs(const GmacsOptions& opts, std::ostream& out);

void print_report(const EvalReport& report, std::ostream& out);
void print_macs(const MacReport& report, std::ostream& out);

/// Heatmap triples must sum to one at every pixel.
void validate_heatmaps(const Tensor<float>& maps, double tolerance = 1e-6);

}  // namespace stda::tools
