#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stda/ops.hpp"
#include "stda/tensor.hpp"

namespace stda {

/// Named learnable tensors in creation order. Initial values are drawn from
/// one seeded generator, so identical seeds give identical parameters for any
/// scalar type.
template <typename T>
class ParameterSet {
 public:
  explicit ParameterSet(uint64_t seed) : rng_(seed) {}

  /// Uniform(-bound, bound) values; bound == 0 gives zeros.
  Tensor<T> create(const std::string& name, Shape shape, double bound);

  const std::vector<std::pair<std::string, Tensor<T>>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Tensor<T>>>& entries() { return entries_; }
  const Tensor<T>* find(const std::string& name) const;

  void zero_grad();
  int64_t total_size() const;

 private:
  std::mt19937_64 rng_;
  std::vector<std::pair<std::string, Tensor<T>>> entries_;
};

/// Uniform bound for Kaiming fan-in initialisation ahead of a LeakyReLU.
double kaiming_bound(int64_t fan_in, double slope);

/// kaiming: gain for a following LeakyReLU; linear: unit gain for layers
/// with no activation after them; residual: linear scaled by 0.1 for the last
/// conv of a residual branch; zeros: all weights zero.
enum class InitMode { kaiming, linear, residual, zeros };

template <typename T>
struct Conv2d {
  Tensor<T> weight, bias;
  int stride = 1;
  int padding = 0;

  static Conv2d make(ParameterSet<T>& params, const std::string& name, int64_t cin, int64_t cout,
                     int kernel, int stride, int padding, double slope,
                     InitMode init = InitMode::kaiming);
  Tensor<T> operator()(const Tensor<T>& x) const { return conv2d(x, weight, bias, stride, padding); }
  int64_t in_channels() const { return weight.dim(1); }
  int64_t out_channels() const { return weight.dim(0); }
  int kernel() const { return static_cast<int>(weight.dim(2)); }
};

template <typename T>
struct TransposedConv2d {
  Tensor<T> weight, bias;  // weight [Cin, Cout, k, k]
  int stride = 2;
  int padding = 1;

  static TransposedConv2d make(ParameterSet<T>& params, const std::string& name, int64_t cin,
                               int64_t cout, int kernel, int stride, int padding, double slope);
  Tensor<T> operator()(const Tensor<T>& x) const {
    return transposed_conv2d(x, weight, bias, stride, padding);
  }
  int64_t in_channels() const { return weight.dim(0); }
  int64_t out_channels() const { return weight.dim(1); }
  int kernel() const { return static_cast<int>(weight.dim(2)); }
};

/// x + conv(leaky(conv(x))), 3x3 convolutions, no normalisation.
template <typename T>
struct ResidualBlock {
  Conv2d<T> first, second;
  T slope;

  static ResidualBlock make(ParameterSet<T>& params, const std::string& name, int64_t channels,
                            double slope);
  Tensor<T> operator()(const Tensor<T>& x) const {
    return add(x, second(leaky_relu(first(x), slope)));
  }
};

/// A strided conv (or deconv), LeakyReLU, then a chain of residual blocks.
template <typename T>
struct ResidualStage {
  std::vector<ResidualBlock<T>> blocks;
  T slope;
  Tensor<T> operator()(Tensor<T> x) const {
    for (const auto& b : blocks) x = b(x);
    return x;
  }
};

template <typename T>
ResidualStage<T> make_residual_stage(ParameterSet<T>& params, const std::string& name,
                                     int64_t channels, int count, double slope);

}  // namespace stda
