#include "stda/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

namespace stda {

namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapC = Eigen::Map<const MatRM<T>>;
template <typename T>
using MapM = Eigen::Map<MatRM<T>>;

template <typename T>
void require_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

template <typename T>
void accumulate(std::span<T> dst, std::span<const T> src) {
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

struct ConvGeometry {
  int64_t channels, height, width;  // the "image" side
  int kh, kw, stride, padding;
  int64_t out_h, out_w;             // the "column" side
  int64_t rows() const { return channels * kh * kw; }
  int64_t cols() const { return out_h * out_w; }
  bool is_pointwise() const {
    return kh == 1 && kw == 1 && stride == 1 && padding == 0;
  }
};

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
  const int64_t cols = g.cols();
  for (int64_t c = 0; c < g.channels; ++c) {
    for (int i = 0; i < g.kh; ++i) {
      for (int j = 0; j < g.kw; ++j) {
        T* dst = col + ((c * g.kh + i) * g.kw + j) * cols;
        for (int64_t oy = 0; oy < g.out_h; ++oy) {
          const int64_t iy = oy * g.stride - g.padding + i;
          T* row = dst + oy * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(row, row + g.out_w, T(0));
            continue;
          }
          const T* src = x + (c * g.height + iy) * g.width;
          for (int64_t ox = 0; ox < g.out_w; ++ox) {
            const int64_t ix = ox * g.stride - g.padding + j;
            row[ox] = (ix >= 0 && ix < g.width) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* x) {
  const int64_t cols = g.cols();
  for (int64_t c = 0; c < g.channels; ++c) {
    for (int i = 0; i < g.kh; ++i) {
      for (int j = 0; j < g.kw; ++j) {
        const T* src = col + ((c * g.kh + i) * g.kw + j) * cols;
        for (int64_t oy = 0; oy < g.out_h; ++oy) {
          const int64_t iy = oy * g.stride - g.padding + i;
          if (iy < 0 || iy >= g.height) continue;
          const T* row = src + oy * g.out_w;
          T* dst = x + (c * g.height + iy) * g.width;
          for (int64_t ox = 0; ox < g.out_w; ++ox) {
            const int64_t ix = ox * g.stride - g.padding + j;
            if (ix >= 0 && ix < g.width) dst[ix] += row[ox];
          }
        }
      }
    }
  }
}

// Splits [N,C,H,W] or [C,H,W] into (N, C, H, W).
template <typename T>
std::array<int64_t, 4> batch_dims(const char* op, const Tensor<T>& t) {
  const auto& s = t.shape();
  if (s.size() == 4) return {s[0], s[1], s[2], s[3]};
  if (s.size() == 3) return {1, s[0], s[1], s[2]};
  throw ShapeError(std::string(op) + ": expected [N,C,H,W] or [C,H,W], got " + shape_str(s));
}

Shape with_batch(bool batched, int64_t n, int64_t c, int64_t h, int64_t w) {
  if (batched) return {n, c, h, w};
  return {c, h, w};
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("add", a, b);
  auto x = a.data();
  auto y = b.data();
  std::vector<T> out(x.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return detail::make_result<T>("add", a.shape(), std::move(out), {&a, &b},
                                [a, b](const detail::Node<T>& self) {
                                  std::span<const T> g = self.grad;
                                  if (auto ga = detail::grad_of(a); !ga.empty()) accumulate<T>(ga, g);
                                  if (auto gb = detail::grad_of(b); !gb.empty()) accumulate<T>(gb, g);
                                });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("sub", a, b);
  auto x = a.data();
  auto y = b.data();
  std::vector<T> out(x.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return detail::make_result<T>("sub", a.shape(), std::move(out), {&a, &b},
                                [a, b](const detail::Node<T>& self) {
                                  const auto& g = self.grad;
                                  if (auto ga = detail::grad_of(a); !ga.empty()) accumulate<T>(ga, g);
                                  if (auto gb = detail::grad_of(b); !gb.empty()) {
                                    for (size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
                                  }
                                });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("mul", a, b);
  auto x = a.data();
  auto y = b.data();
  std::vector<T> out(x.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return detail::make_result<T>("mul", a.shape(), std::move(out), {&a, &b},
                                [a, b](const detail::Node<T>& self) {
                                  const auto& g = self.grad;
                                  auto x = a.data();
                                  auto y = b.data();
                                  if (auto ga = detail::grad_of(a); !ga.empty()) {
                                    for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * y[i];
                                  }
                                  if (auto gb = detail::grad_of(b); !gb.empty()) {
                                    for (size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * x[i];
                                  }
                                });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  auto x = a.data();
  std::vector<T> out(x.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = x[i] * factor;
  return detail::make_result<T>("scale", a.shape(), std::move(out), {&a},
                                [a, factor](const detail::Node<T>& self) {
                                  auto ga = detail::grad_of(a);
                                  for (size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * factor;
                                });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  double total = 0;
  for (T v : a.data()) total += static_cast<double>(v);
  return detail::make_result<T>("sum", {1}, {static_cast<T>(total)}, {&a}, [a](const detail::Node<T>& self) {
    auto ga = detail::grad_of(a);
    const T g = self.grad[0];
    for (auto& v : ga) v += g;
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  double total = 0;
  for (T v : a.data()) total += static_cast<double>(v);
  const T inv = T(1) / static_cast<T>(a.numel());
  return detail::make_result<T>("mean", {1}, {static_cast<T>(total / static_cast<double>(a.numel()))}, {&a},
                                [a, inv](const detail::Node<T>& self) {
                                  auto ga = detail::grad_of(a);
                                  const T g = self.grad[0] * inv;
                                  for (auto& v : ga) v += g;
                                });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  auto in = x.data();
  std::vector<T> out(in.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = in[i] >= T(0) ? in[i] : slope * in[i];
  return detail::make_result<T>("leaky_relu", x.shape(), std::move(out), {&x},
                                [x, slope](const detail::Node<T>& self) {
                                  auto gx = detail::grad_of(x);
                                  auto in = x.data();
                                  for (size_t i = 0; i < gx.size(); ++i) {
                                    gx[i] += in[i] >= T(0) ? self.grad[i] : slope * self.grad[i];
                                  }
                                });
}

template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi) {
  auto in = x.data();
  std::vector<T> out(in.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(in[i], lo, hi);
  return detail::make_result<T>("clamp", x.shape(), std::move(out), {&x},
                                [x, lo, hi](const detail::Node<T>& self) {
                                  auto gx = detail::grad_of(x);
                                  auto in = x.data();
                                  for (size_t i = 0; i < gx.size(); ++i) {
                                    if (in[i] >= lo && in[i] <= hi) gx[i] += self.grad[i];
                                  }
                                });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 int stride, int padding) {
  const auto [n, cin, h, w] = batch_dims("conv2d", input);
  const auto& ws = weight.shape();
  if (ws.size() != 4 || ws[1] != cin) {
    throw ShapeError("conv2d: weight " + shape_str(ws) + " incompatible with input " +
                     shape_str(input.shape()));
  }
  if (stride < 1 || padding < 0) throw ShapeError("conv2d: invalid stride/padding");
  const int64_t cout = ws[0];
  if (bias.defined() && bias.shape() != Shape{cout}) throw ShapeError("conv2d: bias shape");
  const int kh = static_cast<int>(ws[2]);
  const int kw = static_cast<int>(ws[3]);
  if (h + 2 * padding < kh || w + 2 * padding < kw) throw ShapeError("conv2d: kernel larger than padded input");
  const ConvGeometry g{cin, h, w, kh, kw, stride, padding,
                       (h + 2 * padding - kh) / stride + 1, (w + 2 * padding - kw) / stride + 1};

  const int64_t in_stride = cin * h * w;
  const int64_t out_stride = cout * g.cols();
  std::vector<T> out(static_cast<size_t>(n * out_stride));
  MapC<T> wm(weight.data().data(), cout, g.rows());
  std::vector<T> col(g.is_pointwise() ? 0 : static_cast<size_t>(g.rows() * g.cols()));
  const T* x = input.data().data();
  for (int64_t b = 0; b < n; ++b) {
    const T* xb = x + b * in_stride;
    const T* colp = xb;
    if (!g.is_pointwise()) {
      im2col(xb, g, col.data());
      colp = col.data();
    }
    MapM<T> ob(out.data() + b * out_stride, cout, g.cols());
    ob.noalias() = wm * MapC<T>(colp, g.rows(), g.cols());
    if (bias.defined()) {
      auto bv = bias.data();
      for (int64_t c = 0; c < cout; ++c) ob.row(c).array() += bv[c];
    }
  }

  Shape out_shape = with_batch(input.ndim() == 4, n, cout, g.out_h, g.out_w);
  return detail::make_result<T>(
      "conv2d", std::move(out_shape), std::move(out), {&input, &weight, &bias},
      [input, weight, bias, g, n, cout, in_stride, out_stride](const detail::Node<T>& self) {
        auto gx = detail::grad_of(input);
        auto gw = detail::grad_of(weight);
        auto gb = detail::grad_of(bias);
        MapC<T> wm(weight.data().data(), cout, g.rows());
        std::vector<T> col(static_cast<size_t>(g.rows() * g.cols()));
        const T* x = input.data().data();
        for (int64_t b = 0; b < n; ++b) {
          MapC<T> go(self.grad.data() + b * out_stride, cout, g.cols());
          if (!gb.empty()) {
            for (int64_t c = 0; c < cout; ++c) {
              T acc = 0;
              for (int64_t j = 0; j < go.cols(); ++j) acc += go(c, j);
              gb[c] += acc;
            }
          }
          if (!gw.empty()) {
            const T* colp = x + b * in_stride;
            if (!g.is_pointwise()) {
              im2col(colp, g, col.data());
              colp = col.data();
            }
            MapM<T>(gw.data(), cout, g.rows()).noalias() +=
                go * MapC<T>(colp, g.rows(), g.cols()).transpose();
          }
          if (!gx.empty()) {
            if (g.is_pointwise()) {
              MapM<T>(gx.data() + b * in_stride, g.rows(), g.cols()).noalias() += wm.transpose() * go;
            } else {
              MapM<T>(col.data(), g.rows(), g.cols()).noalias() = wm.transpose() * go;
              col2im(col.data(), g, gx.data() + b * in_stride);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> transposed_conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                            const Tensor<T>& bias, int stride, int padding) {
  const auto [n, cin, h, w] = batch_dims("transposed_conv2d", input);
  const auto& ws = weight.shape();
  if (ws.size() != 4 || ws[0] != cin) {
    throw ShapeError("transposed_conv2d: weight " + shape_str(ws) + " incompatible with input " +
                     shape_str(input.shape()));
  }
  if (stride < 1 || padding < 0) throw ShapeError("transposed_conv2d: invalid stride/padding");
  const int64_t cout = ws[1];
  if (bias.defined() && bias.shape() != Shape{cout}) throw ShapeError("transposed_conv2d: bias shape");
  const int kh = static_cast<int>(ws[2]);
  const int kw = static_cast<int>(ws[3]);
  const int64_t oh = (h - 1) * stride - 2 * padding + kh;
  const int64_t ow = (w - 1) * stride - 2 * padding + kw;
  if (oh < 1 || ow < 1) throw ShapeError("transposed_conv2d: empty output");
  // Geometry of the conv2d whose adjoint this is: image side = our output.
  const ConvGeometry g{cout, oh, ow, kh, kw, stride, padding, h, w};

  const int64_t in_stride = cin * h * w;
  const int64_t out_stride = cout * oh * ow;
  std::vector<T> out(static_cast<size_t>(n * out_stride), T(0));
  MapC<T> wm(weight.data().data(), cin, g.rows());
  std::vector<T> col(static_cast<size_t>(g.rows() * g.cols()));
  const T* x = input.data().data();
  for (int64_t b = 0; b < n; ++b) {
    MapM<T>(col.data(), g.rows(), g.cols()).noalias() =
        wm.transpose() * MapC<T>(x + b * in_stride, cin, g.cols());
    T* ob = out.data() + b * out_stride;
    col2im(col.data(), g, ob);
    if (bias.defined()) {
      auto bv = bias.data();
      for (int64_t c = 0; c < cout; ++c) {
        for (int64_t i = 0; i < oh * ow; ++i) ob[c * oh * ow + i] += bv[c];
      }
    }
  }

  Shape out_shape = with_batch(input.ndim() == 4, n, cout, oh, ow);
  return detail::make_result<T>(
      "transposed_conv2d", std::move(out_shape), std::move(out), {&input, &weight, &bias},
      [input, weight, bias, g, n, cin, cout, in_stride, out_stride](const detail::Node<T>& self) {
        auto gx = detail::grad_of(input);
        auto gw = detail::grad_of(weight);
        auto gb = detail::grad_of(bias);
        MapC<T> wm(weight.data().data(), cin, g.rows());
        std::vector<T> col(static_cast<size_t>(g.rows() * g.cols()));
        const T* x = input.data().data();
        const int64_t plane = g.height * g.width;
        for (int64_t b = 0; b < n; ++b) {
          const T* go = self.grad.data() + b * out_stride;
          if (!gb.empty()) {
            for (int64_t c = 0; c < cout; ++c) {
              T s = 0;
              for (int64_t i = 0; i < plane; ++i) s += go[c * plane + i];
              gb[c] += s;
            }
          }
          if (gx.empty() && gw.empty()) continue;
          im2col(go, g, col.data());
          MapC<T> dcol(col.data(), g.rows(), g.cols());
          if (!gx.empty()) {
            MapM<T>(gx.data() + b * in_stride, cin, g.cols()).noalias() += wm * dcol;
          }
          if (!gw.empty()) {
            MapM<T>(gw.data(), cin, g.rows()).noalias() +=
                MapC<T>(x + b * in_stride, cin, g.cols()) * dcol.transpose();
          }
        }
      });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  const auto& is = input.shape();
  const auto& ws = weight.shape();
  if (is.size() != 2 || ws.size() != 2 || ws[1] != is[1]) {
    throw ShapeError("linear: input " + shape_str(is) + " incompatible with weight " + shape_str(ws));
  }
  const int64_t rows = is[0];
  const int64_t cin = is[1];
  const int64_t cout = ws[0];
  if (bias.defined() && bias.shape() != Shape{cout}) throw ShapeError("linear: bias shape");
  std::vector<T> out(static_cast<size_t>(rows * cout));
  MapM<T> om(out.data(), rows, cout);
  om.noalias() = MapC<T>(input.data().data(), rows, cin) *
                 MapC<T>(weight.data().data(), cout, cin).transpose();
  if (bias.defined()) {
    auto bv = bias.data();
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t c = 0; c < cout; ++c) om(r, c) += bv[c];
    }
  }
  return detail::make_result<T>(
      "linear", {rows, cout}, std::move(out), {&input, &weight, &bias},
      [input, weight, bias, rows, cin, cout](const detail::Node<T>& self) {
        MapC<T> go(self.grad.data(), rows, cout);
        if (auto gx = detail::grad_of(input); !gx.empty()) {
          MapM<T>(gx.data(), rows, cin).noalias() += go * MapC<T>(weight.data().data(), cout, cin);
        }
        if (auto gw = detail::grad_of(weight); !gw.empty()) {
          MapM<T>(gw.data(), cout, cin).noalias() +=
              go.transpose() * MapC<T>(input.data().data(), rows, cin);
        }
        if (auto gb = detail::grad_of(bias); !gb.empty()) {
          for (int64_t c = 0; c < cout; ++c) {
            T acc = 0;
            for (int64_t r = 0; r < go.rows(); ++r) acc += go(r, c);
            gb[c] += acc;
          }
        }
      });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int group_axes) {
  const auto& s = x.shape();
  if (group_axes < 1 || static_cast<size_t>(group_axes) > s.size()) {
    throw ShapeError("softmax: invalid group axis count");
  }
  int64_t group = 1;
  for (size_t i = s.size() - static_cast<size_t>(group_axes); i < s.size(); ++i) group *= s[i];
  const int64_t groups = x.numel() / group;
  auto in = x.data();
  std::vector<T> out(in.size());
  for (int64_t gi = 0; gi < groups; ++gi) {
    const T* src = in.data() + gi * group;
    T* dst = out.data() + gi * group;
    T mx = *std::max_element(src, src + group);
    double total = 0;
    for (int64_t k = 0; k < group; ++k) {
      dst[k] = std::exp(src[k] - mx);
      total += static_cast<double>(dst[k]);
    }
    const T inv = static_cast<T>(1.0 / total);
    for (int64_t k = 0; k < group; ++k) dst[k] *= inv;
  }
  return detail::make_result<T>("softmax", s, std::move(out), {&x},
                                [x, group, groups](const detail::Node<T>& self) {
                                  auto gx = detail::grad_of(x);
                                  if (gx.empty()) return;
                                  for (int64_t gi = 0; gi < groups; ++gi) {
                                    const T* y = self.data.data() + gi * group;
                                    const T* g = self.grad.data() + gi * group;
                                    T dot = 0;
                                    for (int64_t k = 0; k < group; ++k) dot += y[k] * g[k];
                                    T* dst = gx.data() + gi * group;
                                    for (int64_t k = 0; k < group; ++k) dst[k] += y[k] * (g[k] - dot);
                                  }
                                });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  auto in = x.data();
  std::vector<T> out(in.begin(), in.end());
  return detail::make_result<T>("reshape", std::move(shape), std::move(out), {&x},
                                [x](const detail::Node<T>& self) {
                                  auto gx = detail::grad_of(x);
                                  if (!gx.empty()) accumulate<T>(gx, self.grad);
                                });
}

template <typename T>
Tensor<T> transpose_last2(const Tensor<T>& x) {
  Shape s = x.shape();
  if (s.size() < 2) throw ShapeError("transpose_last2: need at least 2 axes");
  const int64_t r = s[s.size() - 2];
  const int64_t c = s[s.size() - 1];
  const int64_t batch = x.numel() / (r * c);
  std::swap(s[s.size() - 2], s[s.size() - 1]);
  auto in = x.data();
  std::vector<T> out(in.size());
  for (int64_t b = 0; b < batch; ++b) {
    MapM<T>(out.data() + b * r * c, c, r) = MapC<T>(in.data() + b * r * c, r, c).transpose();
  }
  return detail::make_result<T>("transpose_last2", std::move(s), std::move(out), {&x},
                                [x, batch, r, c](const detail::Node<T>& self) {
                                  auto gx = detail::grad_of(x);
                                  if (gx.empty()) return;
                                  for (int64_t b = 0; b < batch; ++b) {
                                    MapM<T>(gx.data() + b * r * c, r, c) +=
                                        MapC<T>(self.grad.data() + b * r * c, c, r).transpose();
                                  }
                                });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  int64_t rows = 0;
  for (const auto& p : parts) {
    Shape t(p.shape().begin() + 1, p.shape().end());
    if (t != tail) throw ShapeError("concat: trailing dims differ");
    rows += p.dim(0);
  }
  std::vector<T> out;
  out.reserve(static_cast<size_t>(rows * shape_numel(tail.empty() ? Shape{1} : tail)));
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  Shape s{rows};
  s.insert(s.end(), tail.begin(), tail.end());
  return detail::make_result<T>("concat", std::move(s), std::move(out), parts,
                                [parts](const detail::Node<T>& self) {
                                  size_t offset = 0;
                                  for (const auto& p : parts) {
                                    const size_t n = static_cast<size_t>(p.numel());
                                    if (auto gp = detail::grad_of(p); !gp.empty()) {
                                      for (size_t i = 0; i < n; ++i) gp[i] += self.grad[offset + i];
                                    }
                                    offset += n;
                                  }
                                });
}

template <typename T>
Tensor<T> stack(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("stack: no inputs");
  for (const auto& p : parts) {
    if (p.shape() != parts[0].shape()) throw ShapeError("stack: shapes differ");
  }
  Shape s{static_cast<int64_t>(parts.size())};
  s.insert(s.end(), parts[0].shape().begin(), parts[0].shape().end());
  std::vector<T> out;
  out.reserve(static_cast<size_t>(shape_numel(s)));
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return detail::make_result<T>("stack", std::move(s), std::move(out), parts,
                                [parts](const detail::Node<T>& self) {
                                  size_t offset = 0;
                                  for (const auto& p : parts) {
                                    const size_t n = static_cast<size_t>(p.numel());
                                    if (auto gp = detail::grad_of(p); !gp.empty()) {
                                      for (size_t i = 0; i < n; ++i) gp[i] += self.grad[offset + i];
                                    }
                                    offset += n;
                                  }
                                });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, int64_t begin, int64_t end) {
  const int64_t rows = x.dim(0);
  if (begin < 0 || end > rows || begin >= end) throw ShapeError("slice: invalid range");
  const int64_t row = x.numel() / rows;
  Shape s = x.shape();
  s[0] = end - begin;
  auto in = x.data();
  std::vector<T> out(in.begin() + begin * row, in.begin() + end * row);
  return detail::make_result<T>("slice", std::move(s), std::move(out), {&x},
                                [x, begin, row](const detail::Node<T>& self) {
                                  auto gx = detail::grad_of(x);
                                  if (gx.empty()) return;
                                  T* dst = gx.data() + begin * row;
                                  for (size_t i = 0; i < self.grad.size(); ++i) dst[i] += self.grad[i];
                                });
}

template <typename T>
Tensor<T> select(const Tensor<T>& x, int64_t index) {
  if (x.ndim() < 2) throw ShapeError("select: need at least 2 axes");
  Shape s(x.shape().begin() + 1, x.shape().end());
  return reshape(slice(x, index, index + 1), std::move(s));
}

#define STDA_INSTANTIATE_OPS(T)                                                          \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> scale(const Tensor<T>&, T);                                         \
  template Tensor<T> sum(const Tensor<T>&);                                              \
  template Tensor<T> mean(const Tensor<T>&);                                             \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                    \
  template Tensor<T> clamp(const Tensor<T>&, T, T);                                      \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int); \
  template Tensor<T> transposed_conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                       int, int);                                        \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> softmax(const Tensor<T>&, int);                                     \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                   \
  template Tensor<T> transpose_last2(const Tensor<T>&);                                  \
  template Tensor<T> concat(const std::vector<Tensor<T>>&);                              \
  template Tensor<T> stack(const std::vector<Tensor<T>>&);                               \
  template Tensor<T> slice(const Tensor<T>&, int64_t, int64_t);                          \
  template Tensor<T> select(const Tensor<T>&, int64_t);

STDA_INSTANTIATE_OPS(float)
STDA_INSTANTIATE_OPS(double)

}  // namespace stda
