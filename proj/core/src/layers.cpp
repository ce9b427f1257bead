#include "stda/layers.hpp"

#include <cmath>

namespace stda {

template <typename T>
Tensor<T> ParameterSet<T>::create(const std::string& name, Shape shape, double bound) {
  if (find(name)) throw std::invalid_argument("duplicate parameter name " + name);
  std::vector<T> values(static_cast<size_t>(shape_numel(shape)), T(0));
  if (bound > 0) {
    for (auto& v : values) {
      // 53 random bits mapped onto [0, 1); stable across standard libraries.
      const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
      v = static_cast<T>((2.0 * u - 1.0) * bound);
    }
  }
  auto t = Tensor<T>::from_data(std::move(shape), std::move(values), /*requires_grad=*/true);
  entries_.emplace_back(name, t);
  return t;
}

template <typename T>
const Tensor<T>* ParameterSet<T>::find(const std::string& name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return &t;
  }
  return nullptr;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& [n, t] : entries_) t.zero_grad();
}

template <typename T>
int64_t ParameterSet<T>::total_size() const {
  int64_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

double kaiming_bound(int64_t fan_in, double slope) {
  return std::sqrt(6.0 / ((1.0 + slope * slope) * static_cast<double>(fan_in)));
}

template <typename T>
Conv2d<T> Conv2d<T>::make(ParameterSet<T>& params, const std::string& name, int64_t cin,
                          int64_t cout, int kernel, int stride, int padding, double slope,
                          InitMode init) {
  const int64_t fan_in = cin * kernel * kernel;
  double bound = 0.0;
  if (init == InitMode::kaiming) bound = kaiming_bound(fan_in, slope);
  if (init == InitMode::linear) bound = kaiming_bound(fan_in, 1.0);
  if (init == InitMode::residual) bound = 0.1 * kaiming_bound(fan_in, 1.0);
  Conv2d c;
  c.weight = params.create(name + ".weight", {cout, cin, kernel, kernel}, bound);
  c.bias = params.create(name + ".bias", {cout}, 0.0);
  c.stride = stride;
  c.padding = padding;
  return c;
}

template <typename T>
TransposedConv2d<T> TransposedConv2d<T>::make(ParameterSet<T>& params, const std::string& name,
                                              int64_t cin, int64_t cout, int kernel, int stride,
                                              int padding, double slope) {
  // Each output pixel receives roughly cin*k*k/stride^2 contributions.
  const int64_t fan_in = std::max<int64_t>(1, cin * kernel * kernel / (stride * stride));
  TransposedConv2d c;
  c.weight = params.create(name + ".weight", {cin, cout, kernel, kernel}, kaiming_bound(fan_in, slope));
  c.bias = params.create(name + ".bias", {cout}, 0.0);
  c.stride = stride;
  c.padding = padding;
  return c;
}

template <typename T>
ResidualBlock<T> ResidualBlock<T>::make(ParameterSet<T>& params, const std::string& name,
                                        int64_t channels, double slope) {
  ResidualBlock b;
  b.first = Conv2d<T>::make(params, name + ".conv1", channels, channels, 3, 1, 1, slope);
  b.second = Conv2d<T>::make(params, name + ".conv2", channels, channels, 3, 1, 1, slope, InitMode::residual);
  b.slope = static_cast<T>(slope);
  return b;
}

template <typename T>
ResidualStage<T> make_residual_stage(ParameterSet<T>& params, const std::string& name,
                                     int64_t channels, int count, double slope) {
  ResidualStage<T> s;
  s.slope = static_cast<T>(slope);
  for (int i = 0; i < count; ++i) {
    s.blocks.push_back(ResidualBlock<T>::make(params, name + ".res" + std::to_string(i), channels, slope));
  }
  return s;
}

#define STDA_INSTANTIATE_LAYERS(T)                                                          \
  template class ParameterSet<T>;                                                           \
  template struct Conv2d<T>;                                                                \
  template struct TransposedConv2d<T>;                                                      \
  template struct ResidualBlock<T>;                                                         \
  template ResidualStage<T> make_residual_stage(ParameterSet<T>&, const std::string&, int64_t, \
                                                int, double);

STDA_INSTANTIATE_LAYERS(float)
STDA_INSTANTIATE_LAYERS(double)

}  // namespace stda
