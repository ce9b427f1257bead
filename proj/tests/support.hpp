#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stda/layers.hpp"
#include "stda/ops.hpp"
#include "stda/tensor.hpp"

namespace stda::test {

inline Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                                    bool requires_grad = true) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
  for (auto& x : v) x = u(rng);
  return Tensor<double>::from_data(std::move(shape), std::move(v), requires_grad);
}

inline Tensor<float> random_image(Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> v(static_cast<size_t>(shape_numel(shape)));
  for (auto& x : v) x = u(rng);
  return Tensor<float>::from_data(std::move(shape), std::move(v));
}

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-4});
}

struct GradReport {
  double max_error = 0;
  std::string worst;
  int checked = 0;
  int kinks = 0;  // probes whose neighbourhood straddles a LeakyReLU corner at every step
};

/// Finite-difference derivative of g(s) at s = 0. Starts from central
/// differences with h = 1e-5 and halves the step by decades while the
/// one-sided quotients disagree, which happens when a piecewise-linear
/// activation changes branch inside [-h, h]. Returns nullopt if no step
/// down to 1e-7 gives a smooth neighbourhood.
inline std::optional<double> numeric_derivative(const std::function<double(double)>& g) {
  const double centre = g(0.0);
  for (double h : {1e-5, 1e-6, 1e-7}) {
    const double up = g(h), down = g(-h);
    const double fwd = (up - centre) / h, bwd = (centre - down) / h;
    const double scale = std::max({std::abs(fwd), std::abs(bwd), 1e-4});
    if (std::abs(fwd - bwd) <= 2e-5 * scale + 1e-13 * std::max(std::abs(centre), 1.0) / h) return (up - down) / (2 * h);
  }
  return std::nullopt;
}

/// Finite differences of a scalar function against the tape's gradients for
/// selected elements of every input. `per_input` caps the number of
/// coordinates probed per tensor (0 = all).
inline GradReport check_gradients(const std::function<Tensor<double>()>& f, std::vector<Tensor<double>> inputs,
                                  int per_input = 0, uint64_t seed = 1, const std::vector<std::string>& names = {}) {
  for (auto& x : inputs) x.zero_grad();
  f().backward();
  GradReport r;
  std::mt19937_64 rng(seed);
  for (size_t i = 0; i < inputs.size(); ++i) {
    auto& x = inputs[i];
    const std::vector<double> g = x.grad();
    std::vector<int64_t> coords(static_cast<size_t>(x.numel()));
    for (int64_t j = 0; j < x.numel(); ++j) coords[j] = j;
    if (per_input > 0 && x.numel() > per_input) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<size_t>(per_input));
    }
    for (int64_t j : coords) {
      auto d = x.mutable_data();
      const double saved = d[j];
      const auto numeric = numeric_derivative([&](double s) {
        d[j] = saved + s;
        const double v = f().item();
        d[j] = saved;
        return v;
      });
      ++r.checked;
      if (!numeric) {
        ++r.kinks;
        continue;
      }
      const double e = relative_error(g[j], *numeric);
      if (e > r.max_error) {
        r.max_error = e;
        r.worst = (i < names.size() ? names[i] : "input " + std::to_string(i)) + "[" + std::to_string(j) +
                  "] analytic " + std::to_string(g[j]) + " numeric " + std::to_string(*numeric);
      }
    }
  }
  if (r.kinks * 10 > r.checked) {
    r.max_error = std::numeric_limits<double>::infinity();
    r.worst = std::to_string(r.kinks) + " of " + std::to_string(r.checked) + " probes sit on activation corners";
  }
  return r;
}

/// Directional derivative along one random direction over all inputs at once.
/// Returns +inf when the direction cannot avoid an activation corner.
inline double check_directional(const std::function<Tensor<double>()>& f, std::vector<Tensor<double>> inputs,
                                uint64_t seed = 2) {
  for (auto& x : inputs) x.zero_grad();
  f().backward();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  std::vector<std::vector<double>> dirs;
  std::vector<std::vector<double>> saved;
  double analytic = 0;
  for (auto& x : inputs) {
    std::vector<double> v(static_cast<size_t>(x.numel()));
    const auto g = x.grad();
    for (size_t j = 0; j < v.size(); ++j) {
      v[j] = n(rng);
      analytic += v[j] * g[j];
    }
    dirs.push_back(std::move(v));
    const auto d = x.data();
    saved.emplace_back(d.begin(), d.end());
  }
  const auto numeric = numeric_derivative([&](double s) {
    for (size_t i = 0; i < inputs.size(); ++i) {
      auto d = inputs[i].mutable_data();
      for (size_t j = 0; j < d.size(); ++j) d[j] = saved[i][j] + s * dirs[i][j];
    }
    const double v = f().item();
    for (size_t i = 0; i < inputs.size(); ++i) {
      auto d = inputs[i].mutable_data();
      std::copy(saved[i].begin(), saved[i].end(), d.begin());
    }
    return v;
  });
  if (!numeric) return std::numeric_limits<double>::infinity();
  return relative_error(analytic, *numeric);
}

/// Every tensor of a parameter set.
template <typename T>
std::vector<Tensor<T>> all_params(ParameterSet<T>& params) {
  std::vector<Tensor<T>> out;
  for (auto& [name, t] : params.entries()) out.push_back(t);
  return out;
}

template <typename T>
std::vector<std::string> param_names(const ParameterSet<T>& params) {
  std::vector<std::string> out;
  for (const auto& [name, t] : params.entries()) out.push_back(name);
  return out;
}

/// Overwrites every parameter with uniform noise of the given scale.
template <typename T>
void randomize(ParameterSet<T>& params, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& [name, t] : params.entries()) {
    for (auto& v : t.mutable_data()) v = static_cast<T>(u(rng));
  }
}

/// A weighted sum with fixed random weights, so gradients are not uniform.
inline Tensor<double> probe(const Tensor<double>& x, uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> w(static_cast<size_t>(x.numel()));
  for (auto& v : w) v = u(rng);
  const auto weights = Tensor<double>::from_data(x.shape(), std::move(w));
  return sum(mul(x, weights));
}

}  // namespace stda::test
