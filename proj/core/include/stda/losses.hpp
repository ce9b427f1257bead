#pragma once

#include "stda/stda_layers.hpp"
#include "stda/tensor.hpp"

namespace stda {

struct LossConfig {
  double gamma = 0.05;  // weight of the warp loss
  void validate() const;
};

/// Mean over all elements of (restored - sharp)^2.
template <typename T>
Tensor<T> mse_loss(const Tensor<T>& restored, const Tensor<T>& sharp);

/// Unsupervised photometric loss on downsampled sharp frames [3,C,h,w]:
/// the mean over the four adjacent pairs (a -> b) of
/// mse(S_a, warp(S_b, O_{a->b})). Pixels within `border` of the image edge
/// are left out of every term.
template <typename T>
Tensor<T> warp_loss(const Tensor<T>& sharp_down, const FlowSet<T>& flows, int border = 0);

/// mse + gamma * warp.
template <typename T>
Tensor<T> total_loss(const Tensor<T>& mse, const Tensor<T>& warp, const LossConfig& cfg);

/// Per-frame bilinear 1/4 downsampling of a [N,C,H,W] window.
template <typename T>
Tensor<T> downsample_quarter(const Tensor<T>& frames);

}  // namespace stda
