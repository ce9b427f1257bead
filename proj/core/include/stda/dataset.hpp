#pragma once

// On-disk layout: <root>/<seq>/blur/%05d.png, <root>/<seq>/sharp/%05d.png and
// <root>/manifest.txt with one "name split frames baseline_psnr baseline_ssim"
// line per sequence.

#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stda/synth.hpp"
#include "stda/tensor.hpp"

namespace stda {

struct FrameWindow {
  std::vector<Tensor<float>> blurry;  // each [3,H,W]
  std::vector<Tensor<float>> sharp;   // empty or same length as blurry
  int mid = 0;

  void validate() const;
  /// [N,3,H,W].
  Tensor<float> blurry_stack() const;
  Tensor<float> sharp_stack() const;
};

/// Applies one plan to every frame; draws it from `seed`.
FrameWindow augment(const FrameWindow& window, int64_t crop, uint64_t seed);
FrameWindow apply_augmentation(const FrameWindow& window, const AugmentPlan& plan);

/// Frame indices centre-length/2 .. centre+length/2 with edge frames repeated.
std::vector<int> clamped_window(int count, int centre, int length);

struct Sequence {
  std::string name;
  std::string split = "train";
  std::vector<Tensor<float>> blurry, sharp;
};

struct ManifestEntry {
  std::string name, split;
  int frames = 0;
  double baseline_psnr = 0, baseline_ssim = 0;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& root);
void write_manifest(const std::filesystem::path& root, const std::vector<ManifestEntry>& entries);

/// Writes the frames of one sequence and returns its manifest entry, with the
/// baseline measured on the written (8-bit) frames.
ManifestEntry write_sequence(const std::filesystem::path& root, const Sequence& seq);

/// Loads blur/ and sharp/ frames of a sequence directory in lexicographic order.
Sequence load_sequence(const std::filesystem::path& dir);

class Dataset {
 public:
  /// Sequences listed in the manifest; an empty split selects all of them.
  static Dataset load(const std::filesystem::path& root, const std::string& split = "");

  const std::vector<Sequence>& sequences() const { return sequences_; }
  const std::vector<ManifestEntry>& entries() const { return entries_; }
  FrameWindow window(size_t sequence, int centre, int length) const;

 private:
  std::vector<Sequence> sequences_;
  std::vector<ManifestEntry> entries_;
};

}  // namespace stda
