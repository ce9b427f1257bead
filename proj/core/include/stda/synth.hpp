#pragma once

// Procedural scenes of textured rigid shapes over a textured background,
// rendered at a virtual high frame rate and averaged into blurry frames.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stda/tensor.hpp"

namespace stda {

struct ShapeSpec {
  enum class Kind { square, disc };
  Kind kind = Kind::square;
  double size = 16;                     // side length or diameter, px
  std::array<double, 2> center{32, 32};  // (x, y) at frame 0
  std::array<double, 2> velocity{0, 0};  // px/frame
  std::array<double, 3> color{1, 1, 1};
  double texture_amplitude = 0.3;  // 0 gives a flat colour
  double texture_period = 6;       // px
};

struct SceneSpec {
  int64_t height = 64;
  int64_t width = 64;
  int frames = 8;
  int subframes = 8;     // virtual subframes per frame interval
  int blur_window = 7;   // subframes averaged per blurry frame
  int supersample = 4;   // per-axis anti-aliasing samples
  std::array<double, 2> camera{0, 0};  // background translation, px/frame
  bool textured_background = true;
  double background = 0.5;  // level of an untextured background
  std::vector<ShapeSpec> shapes;

  void validate() const;
};

/// Subframe renders of a scene. Subframe `margin + n * factor` is sharp frame n.
struct RenderedSequence {
  int factor = 1;
  int margin = 0;
  int frames = 0;
  std::vector<Tensor<float>> subframes;  // each [3,H,W]

  const Tensor<float>& sharp(int frame) const;
  std::vector<Tensor<float>> sharp_frames() const;
};

RenderedSequence render_sequence(const SceneSpec& spec, uint64_t seed);

/// Mean of `window` consecutive subframes centred on each frame timestamp.
std::vector<Tensor<float>> synthesize_blur(const RenderedSequence& seq, int window);

/// A scene with `count` random shapes and a random camera drift.
SceneSpec random_scene(int64_t height, int64_t width, int frames, int count, double max_speed,
                       uint64_t seed);

/// Crop, then flips, then counter-clockwise quarter turns.
struct AugmentPlan {
  int64_t top = 0, left = 0;
  int64_t crop = 0;  // 0 keeps the full frame
  bool flip_horizontal = false;
  bool flip_vertical = false;
  int quarter_turns = 0;

  bool identity() const;
};

AugmentPlan draw_augment_plan(int64_t height, int64_t width, int64_t crop, std::mt19937_64& rng);
Tensor<float> apply_augmentation(const Tensor<float>& image, const AugmentPlan& plan);

}  // namespace stda
