#include "stda/synth.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stda {

void SceneSpec::validate() const {
  if (height < 1 || width < 1) throw std::invalid_argument("canvas dims must be positive");
  if (frames < 1) throw std::invalid_argument("frame count must be positive");
  if (subframes < 1) throw std::invalid_argument("subframe factor must be at least 1");
  if (blur_window < 1 || blur_window % 2 == 0) throw std::invalid_argument("blur window must be odd");
  if (blur_window > subframes) {
    throw std::invalid_argument("blur window exceeds the subframe factor");
  }
  if (supersample < 1) throw std::invalid_argument("supersample must be positive");
  auto finite2 = [](const std::array<double, 2>& v) { return std::isfinite(v[0]) && std::isfinite(v[1]); };
  if (!finite2(camera)) throw std::invalid_argument("camera velocity must be finite");
  for (const auto& s : shapes) {
    if (!finite2(s.velocity) || !finite2(s.center)) throw std::invalid_argument("shape motion must be finite");
    if (!(s.size > 0)) throw std::invalid_argument("shape size must be positive");
  }
}

const Tensor<float>& RenderedSequence::sharp(int frame) const {
  if (frame < 0 || frame >= frames) throw std::out_of_range("frame index out of range");
  return subframes[static_cast<size_t>(margin + frame * factor)];
}

std::vector<Tensor<float>> RenderedSequence::sharp_frames() const {
  std::vector<Tensor<float>> out;
  for (int n = 0; n < frames; ++n) out.push_back(sharp(n));
  return out;
}

namespace {

struct Wave {
  double fx, fy, phase, amp;
  std::array<double, 3> tint;
};

struct Background {
  std::vector<Wave> waves;

  std::array<double, 3> at(double x, double y) const {
    std::array<double, 3> v{0.5, 0.5, 0.5};
    for (const auto& w : waves) {
      const double s = w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
      for (int c = 0; c < 3; ++c) v[c] += s * w.tint[c];
    }
    return v;
  }
};

Background make_background(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> freq(0.3, 1.0), phase(0, 2 * std::numbers::pi), tint(0.5, 1.0);
  std::uniform_int_distribution<int> sign(0, 1);
  Background bg;
  for (int i = 0; i < 4; ++i) {
    Wave w;
    w.fx = freq(rng) * (sign(rng) ? 1 : -1);
    w.fy = freq(rng) * (sign(rng) ? 1 : -1);
    w.phase = phase(rng);
    w.amp = 0.1;
    w.tint = {tint(rng), tint(rng), tint(rng)};
    bg.waves.push_back(w);
  }
  return bg;
}

bool covers(const ShapeSpec& s, double dx, double dy) {
  const double half = s.size / 2;
  if (s.kind == ShapeSpec::Kind::square) return dx >= -half && dx < half && dy >= -half && dy < half;
  return dx * dx + dy * dy < half * half;
}

double shape_texture(const ShapeSpec& s, double dx, double dy) {
  if (s.texture_amplitude == 0) return 1.0;
  const double f = 2 * std::numbers::pi / s.texture_period;
  const double pattern = 0.5 + 0.5 * std::sin(f * dx) * std::sin(f * dy);
  return 1.0 - s.texture_amplitude + s.texture_amplitude * pattern;
}

Tensor<float> render_at(const SceneSpec& spec, const Background& bg, double time) {
  const int64_t h = spec.height, w = spec.width;
  const int ss = spec.supersample;
  std::vector<float> out(static_cast<size_t>(3 * h * w));
  const double cam_x = spec.camera[0] * time, cam_y = spec.camera[1] * time;
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      std::array<double, 3> acc{0, 0, 0};
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const double px = static_cast<double>(x) + (sx + 0.5) / ss;
          const double py = static_cast<double>(y) + (sy + 0.5) / ss;
          std::array<double, 3> v;
          if (spec.textured_background) {
            v = bg.at(px - cam_x, py - cam_y);
          } else {
            v = {spec.background, spec.background, spec.background};
          }
          for (const auto& s : spec.shapes) {
            const double dx = px - (s.center[0] + s.velocity[0] * time + cam_x);
            const double dy = py - (s.center[1] + s.velocity[1] * time + cam_y);
            if (!covers(s, dx, dy)) continue;
            const double tex = shape_texture(s, dx, dy);
            for (int c = 0; c < 3; ++c) v[c] = s.color[c] * tex;
          }
          for (int c = 0; c < 3; ++c) acc[c] += v[c];
        }
      }
      for (int c = 0; c < 3; ++c) {
        out[(c * h + y) * w + x] = static_cast<float>(std::clamp(acc[c] / (ss * ss), 0.0, 1.0));
      }
    }
  }
  return Tensor<float>::from_data({3, h, w}, std::move(out));
}

}  // namespace

RenderedSequence render_sequence(const SceneSpec& spec, uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  const Background bg = make_background(rng);
  RenderedSequence seq;
  seq.factor = spec.subframes;
  seq.margin = spec.subframes / 2;
  seq.frames = spec.frames;
  const int total = (spec.frames - 1) * spec.subframes + 1 + 2 * seq.margin;
  for (int j = 0; j < total; ++j) {
    const double time = static_cast<double>(j - seq.margin) / spec.subframes;
    seq.subframes.push_back(render_at(spec, bg, time));
  }
  return seq;
}

std::vector<Tensor<float>> synthesize_blur(const RenderedSequence& seq, int window) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("blur window must be a positive odd number");
  const int half = window / 2;
  if (half > seq.margin || window > seq.factor) {
    throw std::invalid_argument("blur window " + std::to_string(window) + " too large for subframe factor " +
                                std::to_string(seq.factor));
  }
  std::vector<Tensor<float>> out;
  for (int n = 0; n < seq.frames; ++n) {
    const int centre = seq.margin + n * seq.factor;
    const auto& first = seq.subframes[static_cast<size_t>(centre)];
    std::vector<double> acc(static_cast<size_t>(first.numel()), 0.0);
    for (int j = centre - half; j <= centre + half; ++j) {
      auto src = seq.subframes[static_cast<size_t>(j)].data();
      for (size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
    }
    std::vector<float> data(acc.size());
    for (size_t i = 0; i < acc.size(); ++i) data[i] = static_cast<float>(acc[i] / window);
    out.push_back(Tensor<float>::from_data(first.shape(), std::move(data)));
  }
  return out;
}

SceneSpec random_scene(int64_t height, int64_t width, int frames, int count, double max_speed,
                       uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5ce9e5eedULL);
  std::uniform_real_distribution<double> unit(0, 1), speed(-max_speed, max_speed);
  SceneSpec spec;
  spec.height = height;
  spec.width = width;
  spec.frames = frames;
  spec.camera = {0.5 * speed(rng), 0.5 * speed(rng)};
  const double extent = static_cast<double>(std::min(height, width));
  for (int i = 0; i < count; ++i) {
    ShapeSpec s;
    s.kind = unit(rng) < 0.5 ? ShapeSpec::Kind::square : ShapeSpec::Kind::disc;
    s.size = extent * (0.15 + 0.2 * unit(rng));
    s.center = {width * (0.2 + 0.6 * unit(rng)), height * (0.2 + 0.6 * unit(rng))};
    s.velocity = {speed(rng), speed(rng)};
    s.color = {0.1 + 0.9 * unit(rng), 0.1 + 0.9 * unit(rng), 0.1 + 0.9 * unit(rng)};
    s.texture_amplitude = 0.2 + 0.4 * unit(rng);
    s.texture_period = 3 + 6 * unit(rng);
    spec.shapes.push_back(s);
  }
  return spec;
}

bool AugmentPlan::identity() const {
  return crop == 0 && top == 0 && left == 0 && !flip_horizontal && !flip_vertical && quarter_turns % 4 == 0;
}

AugmentPlan draw_augment_plan(int64_t height, int64_t width, int64_t crop, std::mt19937_64& rng) {
  if (crop < 4 || crop % 4 != 0) throw std::invalid_argument("crop size must be a positive multiple of 4");
  if (crop > height || crop > width) {
    throw std::invalid_argument("crop " + std::to_string(crop) + " larger than frame " + std::to_string(height) +
                                "x" + std::to_string(width));
  }
  AugmentPlan p;
  p.crop = crop;
  p.top = std::uniform_int_distribution<int64_t>(0, height - crop)(rng);
  p.left = std::uniform_int_distribution<int64_t>(0, width - crop)(rng);
  std::uniform_int_distribution<int> coin(0, 1), turns(0, 3);
  p.flip_horizontal = coin(rng) == 1;
  p.flip_vertical = coin(rng) == 1;
  p.quarter_turns = turns(rng);
  return p;
}

Tensor<float> apply_augmentation(const Tensor<float>& image, const AugmentPlan& plan) {
  if (image.ndim() != 3) throw ShapeError("apply_augmentation expects [C,H,W]");
  const int64_t c = image.dim(0), h0 = image.dim(1), w0 = image.dim(2);
  int64_t h = plan.crop == 0 ? h0 : plan.crop, w = plan.crop == 0 ? w0 : plan.crop;
  if (plan.top < 0 || plan.left < 0 || plan.top + h > h0 || plan.left + w > w0) {
    throw std::invalid_argument("crop window outside the frame");
  }
  auto src = image.data();
  std::vector<float> cur(static_cast<size_t>(c * h * w));
  for (int64_t k = 0; k < c; ++k) {
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        int64_t u = plan.flip_horizontal ? w - 1 - x : x;
        int64_t v = plan.flip_vertical ? h - 1 - y : y;
        cur[(k * h + y) * w + x] = src[(k * h0 + plan.top + v) * w0 + plan.left + u];
      }
    }
  }
  const int turns = ((plan.quarter_turns % 4) + 4) % 4;
  for (int r = 0; r < turns; ++r) {
    // Counter-clockwise: out[y][x] = in[x][w-1-y], out is w x h.
    std::vector<float> next(cur.size());
    for (int64_t k = 0; k < c; ++k) {
      for (int64_t y = 0; y < w; ++y) {
        for (int64_t x = 0; x < h; ++x) next[(k * w + y) * h + x] = cur[(k * h + x) * w + (w - 1 - y)];
      }
    }
    cur.swap(next);
    std::swap(h, w);
  }
  return Tensor<float>::from_data({c, h, w}, std::move(cur));
}

}  // namespace stda
