#include "stda/optimizer.hpp"

#include <cmath>

namespace stda {

template <typename T>
Adam<T>::Adam(ParameterSet<T>& params, const OptimizerConfig& cfg) : params_(params), cfg_(cfg) {
  for (const auto& [name, p] : params_.entries()) {
    m_.emplace_back(static_cast<size_t>(p.numel()), 0.0);
    v_.emplace_back(static_cast<size_t>(p.numel()), 0.0);
  }
}

template <typename T>
void Adam<T>::step() {
  ++t_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  auto& entries = params_.entries();
  for (size_t i = 0; i < entries.size(); ++i) {
    auto& p = entries[i].second;
    if (!p.has_grad()) continue;
    const std::vector<T> g = p.grad();
    auto w = p.mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (size_t j = 0; j < g.size(); ++j) {
      const double gj = static_cast<double>(g[j]);
      m[j] = b1 * m[j] + (1.0 - b1) * gj;
      v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
      const double mhat = m[j] / c1, vhat = v[j] / c2;
      w[j] = static_cast<T>(static_cast<double>(w[j]) - cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon));
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace stda
