#pragma once

#include <limits>
#include <span>

#include "stda/tensor.hpp"

namespace stda {

/// Returned by psnr() for identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

template <typename T>
double mean_squared_error(std::span<const T> a, std::span<const T> b);

/// 10 * log10(1 / mse) for images in [0, 1].
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b);

/// Single-scale SSIM of [C,H,W] images with dynamic range 1: 11x11 Gaussian
/// window (sigma 1.5), K1 = 0.01, K2 = 0.03, averaged over every valid
/// window position and channel. Both dims must be at least 11.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b);

/// The normalised 11-tap Gaussian used by ssim().
std::span<const double> ssim_window_1d();

}  // namespace stda
