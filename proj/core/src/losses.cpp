#include "stda/losses.hpp"

#include <stdexcept>

#include "stda/ops.hpp"
#include "stda/sampling.hpp"

namespace stda {

void LossConfig::validate() const {
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
}

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& restored, const Tensor<T>& sharp) {
  if (restored.shape() != sharp.shape()) {
    throw ShapeError("mse_loss: shape mismatch " + shape_str(restored.shape()) + " vs " +
                     shape_str(sharp.shape()));
  }
  const Tensor<T> d = sub(restored, sharp);
  return mean(mul(d, d));
}

namespace {

template <typename T>
Tensor<T> interior_mse(const Tensor<T>& a, const Tensor<T>& b, int border) {
  if (border == 0) return mse_loss(a, b);
  const int64_t c = a.dim(0), h = a.dim(1), w = a.dim(2);
  if (2 * border >= h || 2 * border >= w) throw ShapeError("warp_loss: border leaves no interior");
  std::vector<T> mask(static_cast<size_t>(c * h * w), T(0));
  for (int64_t ch = 0; ch < c; ++ch) {
    for (int64_t y = border; y < h - border; ++y) {
      for (int64_t x = border; x < w - border; ++x) mask[(ch * h + y) * w + x] = T(1);
    }
  }
  const int64_t count = c * (h - 2 * border) * (w - 2 * border);
  const Tensor<T> d = sub(a, b);
  const Tensor<T> m = Tensor<T>::from_data(a.shape(), std::move(mask));
  return scale(sum(mul(mul(d, d), m)), T(1) / static_cast<T>(count));
}

}  // namespace

template <typename T>
Tensor<T> warp_loss(const Tensor<T>& sharp_down, const FlowSet<T>& flows, int border) {
  if (!flows.complete()) throw std::invalid_argument("warp_loss: missing flow");
  if (sharp_down.ndim() != 4 || sharp_down.dim(0) != 3) throw ShapeError("warp_loss expects [3,C,h,w] frames");
  const Shape flow_shape{2, sharp_down.dim(2), sharp_down.dim(3)};
  const struct {
    int src, dst;
    const Tensor<T>* flow;
  } pairs[] = {{0, 1, &flows.prev_to_mid}, {1, 0, &flows.mid_to_prev},
               {1, 2, &flows.mid_to_next}, {2, 1, &flows.next_to_mid}};
  std::vector<Tensor<T>> terms;
  for (const auto& p : pairs) {
    if (p.flow->shape() != flow_shape) throw ShapeError("warp_loss: flow not at frame resolution");
    const Tensor<T> src = select(sharp_down, p.src);
    const Tensor<T> dst = select(sharp_down, p.dst);
    terms.push_back(interior_mse(src, backward_warp(dst, *p.flow), border));
  }
  return scale(sum(concat(terms)), T(0.25));
}

template <typename T>
Tensor<T> total_loss(const Tensor<T>& mse, const Tensor<T>& warp, const LossConfig& cfg) {
  cfg.validate();
  return add(mse, scale(warp, static_cast<T>(cfg.gamma)));
}

template <typename T>
Tensor<T> downsample_quarter(const Tensor<T>& frames) {
  if (frames.ndim() != 4) throw ShapeError("downsample_quarter expects [N,C,H,W]");
  std::vector<Tensor<T>> out;
  for (int64_t i = 0; i < frames.dim(0); ++i) {
    out.push_back(resize_bilinear(select(frames, i), 1, 4));
  }
  return stack(out);
}

#define STDA_INSTANTIATE_LOSSES(T)                                                \
  template Tensor<T> mse_loss(const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> warp_loss(const Tensor<T>&, const FlowSet<T>&, int);         \
  template Tensor<T> total_loss(const Tensor<T>&, const Tensor<T>&, const LossConfig&); \
  template Tensor<T> downsample_quarter(const Tensor<T>&);

STDA_INSTANTIATE_LOSSES(float)
STDA_INSTANTIATE_LOSSES(double)

}  // namespace stda
