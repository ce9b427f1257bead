#pragma once

#include <vector>

#include "stda/tensor.hpp"

namespace stda {

// Elementwise arithmetic. Shapes must match exactly (no broadcasting).
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);

// Reductions to a one-element tensor.
template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);

/// x for x >= 0, slope * x otherwise. The derivative at exactly 0 is 1.
template <typename T> Tensor<T> leaky_relu(const Tensor<T>& x, T slope);

/// Elementwise clamp; the derivative is 1 inside [lo, hi] and 0 outside.
template <typename T> Tensor<T> clamp(const Tensor<T>& x, T lo, T hi);

/// Cross-correlation. `input` is [N,Cin,H,W] or [Cin,H,W]; `weight` is
/// [Cout,Cin,kh,kw]; `bias` is [Cout] or undefined.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 int stride = 1, int padding = 0);

/// Adjoint of conv2d with the same weight tensor: `weight` is laid out as
/// [Cin,Cout,kh,kw] where Cin is this op's input channel count. Output
/// spatial size is (H-1)*stride - 2*padding + kh.
template <typename T>
Tensor<T> transposed_conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                            const Tensor<T>& bias, int stride = 1, int padding = 0);

/// Row-wise affine map: input [N,Cin], weight [Cout,Cin], bias [Cout] or undefined.
template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

/// Softmax over the trailing `group_axes` axes jointly, max-subtracted.
template <typename T> Tensor<T> softmax(const Tensor<T>& x, int group_axes = 1);

template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);

/// Swaps the last two axes: [..., R, C] -> [..., C, R].
template <typename T> Tensor<T> transpose_last2(const Tensor<T>& x);

/// Concatenates along axis 0; all trailing dims must agree.
template <typename T> Tensor<T> concat(const std::vector<Tensor<T>>& parts);

/// Stacks equally shaped tensors along a new leading axis.
template <typename T> Tensor<T> stack(const std::vector<Tensor<T>>& parts);

/// Rows [begin, end) along axis 0.
template <typename T> Tensor<T> slice(const Tensor<T>& x, int64_t begin, int64_t end);

/// Entry `index` of axis 0 with that axis removed.
template <typename T> Tensor<T> select(const Tensor<T>& x, int64_t index);

}  // namespace stda
