#include "stda/sampling.hpp"

#include "stda/ops.hpp"

namespace stda {

template <typename T>
Tensor<T> bilinear_sample(const Tensor<T>& feature, const Tensor<T>& points) {
  if (feature.ndim() != 3) throw ShapeError("bilinear_sample: feature must be [C,H,W]");
  if (points.ndim() != 2 || points.dim(1) != 2) throw ShapeError("bilinear_sample: points must be [Q,2]");
  const int64_t c = feature.dim(0), h = feature.dim(1), w = feature.dim(2);
  const int64_t q = points.dim(0);
  auto f = feature.data();
  auto p = points.data();
  std::vector<T> out(static_cast<size_t>(c * q));
  for (int64_t i = 0; i < q; ++i) {
    const auto tap = BilinearTap<T>::make(p[2 * i], p[2 * i + 1], w, h);
    for (int64_t ch = 0; ch < c; ++ch) out[ch * q + i] = tap.sample(f.data() + ch * h * w, w);
  }
  return detail::make_result<T>(
      "bilinear_sample", {c, q}, std::move(out), {&feature, &points},
      [feature, points, c, h, w, q](const detail::Node<T>& self) {
        auto gf = detail::grad_of(feature);
        auto gp = detail::grad_of(points);
        auto f = feature.data();
        auto p = points.data();
        for (int64_t i = 0; i < q; ++i) {
          const auto tap = BilinearTap<T>::make(p[2 * i], p[2 * i + 1], w, h);
          for (int64_t ch = 0; ch < c; ++ch) {
            const T g = self.grad[ch * q + i];
            if (!gf.empty()) tap.scatter(gf.data() + ch * h * w, w, g);
            if (!gp.empty()) {
              T dx, dy;
              tap.coord_grad(f.data() + ch * h * w, w, dx, dy);
              gp[2 * i] += g * dx;
              gp[2 * i + 1] += g * dy;
            }
          }
        }
      });
}

template <typename T>
Tensor<T> backward_warp(const Tensor<T>& feature, const Tensor<T>& flow) {
  if (feature.ndim() != 3) throw ShapeError("backward_warp: feature must be [C,H,W]");
  const int64_t c = feature.dim(0), h = feature.dim(1), w = feature.dim(2);
  if (flow.shape() != Shape{2, h, w}) {
    throw ShapeError("backward_warp: flow " + shape_str(flow.shape()) + " does not match feature " +
                     shape_str(feature.shape()));
  }
  const int64_t plane = h * w;
  auto f = feature.data();
  auto o = flow.data();
  std::vector<T> out(static_cast<size_t>(c * plane));
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      const int64_t pix = y * w + x;
      const auto tap = BilinearTap<T>::make(static_cast<T>(x) + o[pix],
                                             static_cast<T>(y) + o[plane + pix], w, h);
      for (int64_t ch = 0; ch < c; ++ch) out[ch * plane + pix] = tap.sample(f.data() + ch * plane, w);
    }
  }
  return detail::make_result<T>(
      "backward_warp", {c, h, w}, std::move(out), {&feature, &flow},
      [feature, flow, c, h, w, plane](const detail::Node<T>& self) {
        auto gf = detail::grad_of(feature);
        auto go = detail::grad_of(flow);
        auto f = feature.data();
        auto o = flow.data();
        for (int64_t y = 0; y < h; ++y) {
          for (int64_t x = 0; x < w; ++x) {
            const int64_t pix = y * w + x;
            const auto tap = BilinearTap<T>::make(static_cast<T>(x) + o[pix],
                                                   static_cast<T>(y) + o[plane + pix], w, h);
            for (int64_t ch = 0; ch < c; ++ch) {
              const T g = self.grad[ch * plane + pix];
              if (!gf.empty()) tap.scatter(gf.data() + ch * plane, w, g);
              if (!go.empty()) {
                T dx, dy;
                tap.coord_grad(f.data() + ch * plane, w, dx, dy);
                go[pix] += g * dx;
                go[plane + pix] += g * dy;
              }
            }
          }
        }
      });
}

template <typename T>
Tensor<T> compose_flows(const Tensor<T>& first, const Tensor<T>& second) {
  if (first.shape() != second.shape() || first.ndim() != 3 || first.dim(0) != 2) {
    throw ShapeError("compose_flows: flows must share shape [2,H,W]");
  }
  return add(first, backward_warp(second, first));
}

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& image, int num, int den) {
  if (image.ndim() != 3) throw ShapeError("resize_bilinear: image must be [C,H,W]");
  if (num <= 0 || den <= 0) throw ShapeError("resize_bilinear: factor must be positive");
  const int64_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const int64_t oh = h * num / den;
  const int64_t ow = w * num / den;
  if (oh < 1 || ow < 1) throw ShapeError("resize_bilinear: empty output");
  const T inv = static_cast<T>(den) / static_cast<T>(num);
  auto src = image.data();
  std::vector<T> out(static_cast<size_t>(c * oh * ow));
  for (int64_t y = 0; y < oh; ++y) {
    const T sy = (static_cast<T>(y) + T(0.5)) * inv - T(0.5);
    for (int64_t x = 0; x < ow; ++x) {
      const T sx = (static_cast<T>(x) + T(0.5)) * inv - T(0.5);
      const auto tap = BilinearTap<T>::make(sx, sy, w, h);
      for (int64_t ch = 0; ch < c; ++ch) {
        out[(ch * oh + y) * ow + x] = tap.sample(src.data() + ch * h * w, w);
      }
    }
  }
  return detail::make_result<T>(
      "resize_bilinear", {c, oh, ow}, std::move(out), {&image},
      [image, c, h, w, oh, ow, inv](const detail::Node<T>& self) {
        auto gi = detail::grad_of(image);
        if (gi.empty()) return;
        for (int64_t y = 0; y < oh; ++y) {
          const T sy = (static_cast<T>(y) + T(0.5)) * inv - T(0.5);
          for (int64_t x = 0; x < ow; ++x) {
            const T sx = (static_cast<T>(x) + T(0.5)) * inv - T(0.5);
            const auto tap = BilinearTap<T>::make(sx, sy, w, h);
            for (int64_t ch = 0; ch < c; ++ch) tap.scatter(gi.data() + ch * h * w, w, self.grad[(ch * oh + y) * ow + x]);
          }
        }
      });
}

#define STDA_INSTANTIATE_SAMPLING(T)                                             \
  template Tensor<T> bilinear_sample(const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> backward_warp(const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> compose_flows(const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> resize_bilinear(const Tensor<T>&, int, int);

STDA_INSTANTIATE_SAMPLING(float)
STDA_INSTANTIATE_SAMPLING(double)

}  // namespace stda
