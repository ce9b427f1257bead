#include "stda/deform_attn.hpp"

#include <cmath>

#include "stda/ops.hpp"
#include "stda/sampling.hpp"

namespace stda {

namespace {

constexpr double kNormalizationTolerance = 1e-6;

struct AttentionDims {
  int64_t queries, heads, frames, points;
};

template <typename T>
AttentionDims check_layouts(const Tensor<T>& weights, const Tensor<T>& offsets) {
  if (weights.ndim() != 4) throw ShapeError("attention weights must be [Q,M,T,K]");
  const AttentionDims d{weights.dim(0), weights.dim(1), weights.dim(2), weights.dim(3)};
  const Shape expect{d.queries, d.heads, d.frames, d.points, 2};
  if (offsets.shape() != expect) {
    throw ShapeError("sampling offsets " + shape_str(offsets.shape()) + " do not match weights " +
                     shape_str(weights.shape()));
  }
  return d;
}

}  // namespace

template <typename T>
BaseOffsetMap<T>::BaseOffsetMap(int frames, int64_t height, int64_t width)
    : frames_(frames), height_(height), width_(width),
      flows_(static_cast<size_t>(frames * frames)) {
  if (frames < 1 || height < 1 || width < 1) throw ShapeError("BaseOffsetMap: invalid dims");
}

template <typename T>
size_t BaseOffsetMap<T>::index(int from, int to) const {
  if (from < 0 || to < 0 || from >= frames_ || to >= frames_) {
    throw ShapeError("BaseOffsetMap: frame index out of range");
  }
  return static_cast<size_t>(from * frames_ + to);
}

template <typename T>
void BaseOffsetMap<T>::set(int from, int to, Tensor<T> flow) {
  if (from == to) throw ShapeError("BaseOffsetMap: the diagonal is fixed to zero");
  if (flow.shape() != Shape{2, height_, width_}) {
    throw ShapeError("BaseOffsetMap: flow " + shape_str(flow.shape()) + " has wrong dims");
  }
  flows_[index(from, to)] = std::move(flow);
}

template <typename T>
bool BaseOffsetMap<T>::has(int from, int to) const {
  return from == to || flows_[index(from, to)].defined();
}

template <typename T>
const Tensor<T>& BaseOffsetMap<T>::get(int from, int to) const {
  const auto& f = flows_[index(from, to)];
  if (!f.defined()) {
    throw std::out_of_range("missing base flow " + std::to_string(from) + "->" + std::to_string(to));
  }
  return f;
}

template <typename T>
Tensor<T> phi(const Tensor<T>& offsets, const BaseOffsetMap<T>& base,
              std::span<const int> query_frames) {
  if (offsets.ndim() != 5 || offsets.dim(4) != 2) throw ShapeError("phi: offsets must be [Q,M,T,K,2]");
  const int64_t q = offsets.dim(0), m = offsets.dim(1), t = offsets.dim(2), k = offsets.dim(3);
  const int64_t hw = base.height() * base.width();
  if (q != static_cast<int64_t>(query_frames.size()) * hw) {
    throw ShapeError("phi: query count does not match base flow dims");
  }
  if (t != base.frames()) throw ShapeError("phi: frame count does not match base map");

  // Resolve the flows each query block needs before touching any data.
  std::vector<int> blocks(query_frames.begin(), query_frames.end());
  std::vector<Tensor<T>> inputs{offsets};
  std::vector<std::vector<const Tensor<T>*>> lookup(blocks.size(), std::vector<const Tensor<T>*>(t));
  for (size_t b = 0; b < blocks.size(); ++b) {
    for (int vt = 0; vt < t; ++vt) {
      if (blocks[b] == vt) {
        lookup[b][vt] = nullptr;
        continue;
      }
      const Tensor<T>& f = base.get(blocks[b], vt);
      lookup[b][vt] = &f;
      inputs.push_back(f);
    }
  }

  auto src = offsets.data();
  std::vector<T> out(src.begin(), src.end());
  const int64_t per_query = m * t * k * 2;
  for (int64_t qi = 0; qi < q; ++qi) {
    const size_t b = static_cast<size_t>(qi / hw);
    const int64_t pix = qi % hw;
    for (int64_t mi = 0; mi < m; ++mi) {
      for (int64_t vt = 0; vt < t; ++vt) {
        const Tensor<T>* f = lookup[b][vt];
        if (!f) continue;
        auto fd = f->data();
        const T dx = fd[pix];
        const T dy = fd[hw + pix];
        T* dst = out.data() + qi * per_query + ((mi * t + vt) * k) * 2;
        for (int64_t ki = 0; ki < k; ++ki) {
          dst[2 * ki] += dx;
          dst[2 * ki + 1] += dy;
        }
      }
    }
  }

  std::vector<std::vector<Tensor<T>>> flows(blocks.size(), std::vector<Tensor<T>>(t));
  for (size_t b = 0; b < blocks.size(); ++b) {
    for (int64_t vt = 0; vt < t; ++vt) {
      if (lookup[b][vt]) flows[b][vt] = *lookup[b][vt];
    }
  }
  return detail::make_result<T>(
      "phi", offsets.shape(), std::move(out), inputs,
      [offsets, flows, q, m, t, k, hw, per_query](const detail::Node<T>& self) {
        if (auto go = detail::grad_of(offsets); !go.empty()) {
          for (size_t i = 0; i < go.size(); ++i) go[i] += self.grad[i];
        }
        for (int64_t qi = 0; qi < q; ++qi) {
          const size_t b = static_cast<size_t>(qi / hw);
          const int64_t pix = qi % hw;
          for (int64_t vt = 0; vt < t; ++vt) {
            const Tensor<T>& f = flows[b][vt];
            if (!f.defined()) continue;
            auto gf = detail::grad_of(f);
            if (gf.empty()) continue;
            T sx = 0, sy = 0;
            for (int64_t mi = 0; mi < m; ++mi) {
              const T* g = self.grad.data() + qi * per_query + ((mi * t + vt) * k) * 2;
              for (int64_t ki = 0; ki < k; ++ki) {
                sx += g[2 * ki];
                sy += g[2 * ki + 1];
              }
            }
            gf[pix] += sx;
            gf[hw + pix] += sy;
          }
        }
      });
}

template <typename T>
double max_normalization_error(const Tensor<T>& weights) {
  if (weights.ndim() != 4) throw ShapeError("attention weights must be [Q,M,T,K]");
  const int64_t group = weights.dim(2) * weights.dim(3);
  auto a = weights.data();
  double worst = 0;
  for (int64_t g = 0; g < weights.numel() / group; ++g) {
    double s = 0;
    for (int64_t i = 0; i < group; ++i) s += static_cast<double>(a[g * group + i]);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

template <typename T>
Tensor<T> deformable_sample(const Tensor<T>& weights, const Tensor<T>& offsets,
                            const Tensor<T>& values) {
  const AttentionDims d = check_layouts(weights, offsets);
  if (values.ndim() != 4 || values.dim(0) != d.frames) {
    throw ShapeError("values " + shape_str(values.shape()) + " must be [T,H,W,C] with T = " +
                     std::to_string(d.frames));
  }
  const int64_t h = values.dim(1), w = values.dim(2), c = values.dim(3);
  const int64_t hw = h * w;
  if (c % d.heads != 0) throw ShapeError("channel count not divisible by head count");
  if (d.queries % hw != 0) throw ShapeError("query count is not a multiple of H*W");
  for (T v : weights.data()) {
    if (v < T(0)) throw NumericError("attention weights must be non-negative");
  }
  if (max_normalization_error(weights) > kNormalizationTolerance) {
    throw NumericError("attention weights are not normalised over (T, K)");
  }
  const int64_t dh = c / d.heads;
  const int64_t frame_stride = hw * c;

  auto a = weights.data();
  auto p = offsets.data();
  auto v = values.data();
  std::vector<T> out(static_cast<size_t>(d.queries * c), T(0));
  for (int64_t q = 0; q < d.queries; ++q) {
    const int64_t pix = q % hw;
    const T rx = static_cast<T>(pix % w);
    const T ry = static_cast<T>(pix / w);
    for (int64_t m = 0; m < d.heads; ++m) {
      T* dst = out.data() + q * c + m * dh;
      for (int64_t t = 0; t < d.frames; ++t) {
        const T* plane = v.data() + t * frame_stride + m * dh;
        for (int64_t k = 0; k < d.points; ++k) {
          const int64_t slot = ((q * d.heads + m) * d.frames + t) * d.points + k;
          const T weight = a[slot];
          const auto tap = BilinearTap<T>::make(rx + p[2 * slot], ry + p[2 * slot + 1], w, h);
          for (int64_t ch = 0; ch < dh; ++ch) dst[ch] += weight * tap.sample(plane + ch, w, c);
        }
      }
    }
  }

  return detail::make_result<T>(
      "deformable_sample", {d.queries, c}, std::move(out), {&weights, &offsets, &values},
      [weights, offsets, values, d, h, w, c, hw, dh, frame_stride](const detail::Node<T>& self) {
        auto ga = detail::grad_of(weights);
        auto gp = detail::grad_of(offsets);
        auto gv = detail::grad_of(values);
        auto a = weights.data();
        auto p = offsets.data();
        auto v = values.data();
        for (int64_t q = 0; q < d.queries; ++q) {
          const int64_t pix = q % hw;
          const T rx = static_cast<T>(pix % w);
          const T ry = static_cast<T>(pix / w);
          for (int64_t m = 0; m < d.heads; ++m) {
            const T* g = self.grad.data() + q * c + m * dh;
            for (int64_t t = 0; t < d.frames; ++t) {
              const int64_t base = t * frame_stride + m * dh;
              for (int64_t k = 0; k < d.points; ++k) {
                const int64_t slot = ((q * d.heads + m) * d.frames + t) * d.points + k;
                const T weight = a[slot];
                const auto tap = BilinearTap<T>::make(rx + p[2 * slot], ry + p[2 * slot + 1], w, h);
                T da = 0, dx = 0, dy = 0;
                for (int64_t ch = 0; ch < dh; ++ch) {
                  const T* plane = v.data() + base + ch;
                  if (!ga.empty()) da += g[ch] * tap.sample(plane, w, c);
                  if (!gp.empty()) {
                    T vx, vy;
                    tap.coord_grad(plane, w, vx, vy, c);
                    dx += g[ch] * vx;
                    dy += g[ch] * vy;
                  }
                  if (!gv.empty()) tap.scatter(gv.data() + base + ch, w, g[ch] * weight, c);
                }
                if (!ga.empty()) ga[slot] += da;
                if (!gp.empty()) {
                  gp[2 * slot] += weight * dx;
                  gp[2 * slot + 1] += weight * dy;
                }
              }
            }
          }
        }
      });
}

template <typename T>
Tensor<T> deformable_attention(const Tensor<T>& weights, const Tensor<T>& offsets,
                               const Tensor<T>& values, const Tensor<T>& proj_weight,
                               const Tensor<T>& proj_bias) {
  return linear(deformable_sample(weights, offsets, values), proj_weight, proj_bias);
}

#define STDA_INSTANTIATE_DEFORM(T)                                                          \
  template class BaseOffsetMap<T>;                                                          \
  template Tensor<T> phi(const Tensor<T>&, const BaseOffsetMap<T>&, std::span<const int>);  \
  template Tensor<T> deformable_sample(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> deformable_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                          const Tensor<T>&, const Tensor<T>&);              \
  template double max_normalization_error(const Tensor<T>&);

STDA_INSTANTIATE_DEFORM(float)
STDA_INSTANTIATE_DEFORM(double)

}  // namespace stda
