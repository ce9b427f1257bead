#pragma once

// Spatio-temporal deformable attention.
//
// Layouts (Q queries ordered frame-major as (t', y, x); M heads; T value
// frames; K sampling points per head and frame):
//   weights  [Q, M, T, K]      softmax-normalised over (T, K)
//   offsets  [Q, M, T, K, 2]   (dx, dy) in pixels relative to the query pixel
//   values   [T, H, W, C]      head m reads channels [m*C/M, (m+1)*C/M)
//   output   [Q, C]

#include <span>
#include <vector>

#include "stda/tensor.hpp"

namespace stda {

/// Base displacement fields between frame pairs. The diagonal is the zero
/// field and is never stored.
template <typename T>
class BaseOffsetMap {
 public:
  BaseOffsetMap(int frames, int64_t height, int64_t width);

  /// Flow [2,H,W] mapping pixels of frame `from` into frame `to`.
  void set(int from, int to, Tensor<T> flow);
  bool has(int from, int to) const;
  const Tensor<T>& get(int from, int to) const;

  int frames() const { return frames_; }
  int64_t height() const { return height_; }
  int64_t width() const { return width_; }

 private:
  size_t index(int from, int to) const;

  int frames_;
  int64_t height_, width_;
  std::vector<Tensor<T>> flows_;
};

/// Adds base[frame(q) -> t](pixel(q)) to every offset of value frame t.
/// `query_frames[b]` names the frame of the b-th block of H*W queries.
template <typename T>
Tensor<T> phi(const Tensor<T>& offsets, const BaseOffsetMap<T>& base,
              std::span<const int> query_frames);

/// Attention-weighted bilinear gathering of per-head value features.
/// Throws NumericError when a (q, m) weight group does not sum to 1.
template <typename T>
Tensor<T> deformable_sample(const Tensor<T>& weights, const Tensor<T>& offsets,
                            const Tensor<T>& values);

/// deformable_sample followed by the per-query output projection
/// ([C,C] weight, [C] bias).
template <typename T>
Tensor<T> deformable_attention(const Tensor<T>& weights, const Tensor<T>& offsets,
                               const Tensor<T>& values, const Tensor<T>& proj_weight,
                               const Tensor<T>& proj_bias);

/// Largest |sum - 1| over all (q, m) groups of a weights tensor.
template <typename T>
double max_normalization_error(const Tensor<T>& weights);

}  // namespace stda
