#include "stda/metrics.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace stda {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> make_gaussian() {
  std::array<double, kWindow> g{};
  double total = 0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-d * d / (2 * kSigma * kSigma));
    total += g[i];
  }
  for (auto& v : g) v /= total;
  return g;
}

const std::array<double, kWindow> kGaussian = make_gaussian();

// Valid-mode separable filtering of one plane.
std::vector<double> filter_valid(const std::vector<double>& src, int64_t h, int64_t w) {
  const int64_t oh = h - kWindow + 1, ow = w - kWindow + 1;
  std::vector<double> rows(static_cast<size_t>(h * ow));
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < ow; ++x) {
      double s = 0;
      for (int k = 0; k < kWindow; ++k) s += kGaussian[k] * src[y * w + x + k];
      rows[y * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<size_t>(oh * ow));
  for (int64_t y = 0; y < oh; ++y) {
    for (int64_t x = 0; x < ow; ++x) {
      double s = 0;
      for (int k = 0; k < kWindow; ++k) s += kGaussian[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

std::span<const double> ssim_window_1d() { return kGaussian; }

template <typename T>
double mean_squared_error(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size() || a.empty()) throw ShapeError("mean_squared_error: size mismatch");
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw ShapeError("psnr: shape mismatch");
  // Extended precision keeps the closed-form cases exact after rounding.
  auto da = a.data();
  auto db = b.data();
  long double s = 0;
  for (size_t i = 0; i < da.size(); ++i) {
    const long double d = static_cast<long double>(da[i]) - static_cast<long double>(db[i]);
    s += d * d;
  }
  if (s == 0.0L) return kPsnrIdentical;
  const long double m = s / static_cast<long double>(da.size());
  return static_cast<double>(-10.0L * std::log10(m));
}

template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw ShapeError("ssim: shape mismatch");
  if (a.ndim() != 3) throw ShapeError("ssim expects [C,H,W]");
  const int64_t c = a.dim(0), h = a.dim(1), w = a.dim(2);
  if (h < kWindow || w < kWindow) throw ShapeError("ssim: image smaller than the 11x11 window");
  const int64_t plane = h * w;
  auto da = a.data();
  auto db = b.data();
  double total = 0;
  int64_t count = 0;
  for (int64_t ch = 0; ch < c; ++ch) {
    std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
    for (int64_t i = 0; i < plane; ++i) {
      x[i] = da[ch * plane + i];
      y[i] = db[ch * plane + i];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w);
    const auto my = filter_valid(y, h, w);
    const auto sxx = filter_valid(xx, h, w);
    const auto syy = filter_valid(yy, h, w);
    const auto sxy = filter_valid(xy, h, w);
    for (size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cxy = sxy[i] - mx[i] * my[i];
      total += ((2 * mx[i] * my[i] + kC1) * (2 * cxy + kC2)) /
               ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
    }
    count += static_cast<int64_t>(mx.size());
  }
  return total / static_cast<double>(count);
}

template double mean_squared_error<float>(std::span<const float>, std::span<const float>);
template double mean_squared_error<double>(std::span<const double>, std::span<const double>);
template double psnr(const Tensor<float>&, const Tensor<float>&);
template double psnr(const Tensor<double>&, const Tensor<double>&);
template double ssim(const Tensor<float>&, const Tensor<float>&);
template double ssim(const Tensor<double>&, const Tensor<double>&);

}  // namespace stda
