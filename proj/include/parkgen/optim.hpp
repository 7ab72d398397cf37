#pragma once

#include <cmath>
#include <vector>

#include "parkgen/nets.hpp"

namespace parkgen {

/// Adam over one Weights object. Parameters without a gradient are skipped.
template <typename T>
class Adam {
 public:
  Adam(const Weights<T>& w, double lr, double beta1 = 0.5, double beta2 = 0.999, double eps = 1e-8)
      : weights_(&w), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& [_, v] : w.params()) {
      m_.emplace_back(v->value.size(), T(0));
      v_.emplace_back(v->value.size(), T(0));
    }
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    const auto& params = weights_->params();
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& node = *params[p].second;
      if (node.grad.empty()) continue;
      auto& m = m_[p];
      auto& v = v_[p];
      for (std::size_t i = 0; i < node.value.size(); ++i) {
        const double g = node.grad.data[i];
        m[i] = static_cast<T>(beta1_ * m[i] + (1.0 - beta1_) * g);
        v[i] = static_cast<T>(beta2_ * v[i] + (1.0 - beta2_) * g * g);
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        node.value.data[i] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  const Weights<T>* weights_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

}  // namespace parkgen
