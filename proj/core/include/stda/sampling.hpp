#pragma once

// Bilinear sampling with border replication, flow-based backward warping and
// resizing. Coordinates are (x, y) in pixels, x rightward and y downward.
// Points outside [0, W-1] x [0, H-1] are clamped onto the border.

#include <cmath>
#include <cstdint>

#include "stda/tensor.hpp"

namespace stda {

/// Neighbour indices and blend weights for one bilinear lookup.
template <typename T>
struct BilinearTap {
  int64_t x0, x1, y0, y1;
  T fx, fy;          // fractional position between (x0, x1) and (y0, y1)
  T dx_scale, dy_scale;  // d(clamped)/d(raw): 1 inside the image, 0 outside

  static BilinearTap make(T x, T y, int64_t width, int64_t height) {
    BilinearTap tap{};
    axis(x, width, tap.x0, tap.x1, tap.fx, tap.dx_scale);
    axis(y, height, tap.y0, tap.y1, tap.fy, tap.dy_scale);
    return tap;
  }

  // The lower index stops at size-2 so the last row/column interpolates with
  // weight 1 on the upper neighbour and keeps a nonzero slope.
  static void axis(T v, int64_t size, int64_t& lo, int64_t& hi, T& frac, T& scale) {
    const T max_coord = static_cast<T>(size - 1);
    scale = (v >= T(0) && v <= max_coord) ? T(1) : T(0);
    const T c = v < T(0) ? T(0) : (v > max_coord ? max_coord : v);
    if (size == 1) {
      lo = hi = 0;
      frac = T(0);
      return;
    }
    lo = static_cast<int64_t>(std::floor(c));
    if (lo > size - 2) lo = size - 2;
    hi = lo + 1;
    frac = c - static_cast<T>(lo);
  }

  /// Value at the tap from a plane whose pixel (y, x) lives at
  /// base[(y * width + x) * stride].
  T sample(const T* base, int64_t width, int64_t stride = 1) const {
    const T top = lerp(base[idx(y0, x0, width, stride)], base[idx(y0, x1, width, stride)], fx);
    const T bottom = lerp(base[idx(y1, x0, width, stride)], base[idx(y1, x1, width, stride)], fx);
    return lerp(top, bottom, fy);
  }

  // Exact at the end points so integer positions reproduce stored values.
  static T lerp(T a, T b, T t) {
    if (t == T(0)) return a;
    if (t == T(1)) return b;
    return (T(1) - t) * a + t * b;
  }

  /// Adds `g` times the blend weights into a gradient plane.
  void scatter(T* base, int64_t width, T g, int64_t stride = 1) const {
    base[idx(y0, x0, width, stride)] += g * (T(1) - fx) * (T(1) - fy);
    base[idx(y0, x1, width, stride)] += g * fx * (T(1) - fy);
    base[idx(y1, x0, width, stride)] += g * (T(1) - fx) * fy;
    base[idx(y1, x1, width, stride)] += g * fx * fy;
  }

  /// d(value)/dx and d(value)/dy with respect to the raw (unclamped) point.
  void coord_grad(const T* base, int64_t width, T& dvdx, T& dvdy, int64_t stride = 1) const {
    const T v00 = base[idx(y0, x0, width, stride)];
    const T v01 = base[idx(y0, x1, width, stride)];
    const T v10 = base[idx(y1, x0, width, stride)];
    const T v11 = base[idx(y1, x1, width, stride)];
    dvdx = ((T(1) - fy) * (v01 - v00) + fy * (v11 - v10)) * dx_scale;
    dvdy = ((T(1) - fx) * (v10 - v00) + fx * (v11 - v01)) * dy_scale;
  }

  static int64_t idx(int64_t y, int64_t x, int64_t width, int64_t stride) {
    return (y * width + x) * stride;
  }
};

/// feature [C,H,W], points [Q,2] as (x, y) -> [C,Q]. Differentiable in both.
template <typename T>
Tensor<T> bilinear_sample(const Tensor<T>& feature, const Tensor<T>& points);

/// output(c, y, x) = feature(c, y + flow_y(y,x), x + flow_x(y,x)).
/// feature [C,H,W], flow [2,H,W] with channel 0 = x displacement.
template <typename T>
Tensor<T> backward_warp(const Tensor<T>& feature, const Tensor<T>& flow);

/// Chains a->b and b->c flows into a->c: first + warp(second, first).
template <typename T>
Tensor<T> compose_flows(const Tensor<T>& first, const Tensor<T>& second);

/// Resamples [C,H,W] by num/den with the align-corners-false convention.
/// Output dims are floor(H*num/den), floor(W*num/den).
template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& image, int num, int den);

}  // namespace stda
