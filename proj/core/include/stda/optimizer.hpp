#pragma once

#include <cstdint>
#include <vector>

#include "stda/config.hpp"
#include "stda/layers.hpp"

namespace stda {

/// Adam with bias-corrected moment estimates.
template <typename T>
class Adam {
 public:
  Adam(ParameterSet<T>& params, const OptimizerConfig& cfg);

  /// Updates every parameter from its accumulated gradient.
  void step();
  int64_t steps() const { return t_; }

 private:
  ParameterSet<T>& params_;
  OptimizerConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  int64_t t_ = 0;
};

}  // namespace stda
