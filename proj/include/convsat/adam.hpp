#pragma once
// Adam with bias correction, operating over a ParamStore and a gradient
// store of identical layout. Deterministic: parameters update in insertion
// order, single-threaded.

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "convsat/param_store.hpp"

namespace convsat {

template <typename T>
class Adam {
 public:
  explicit Adam(const ParamStore<T>& params, T lr = static_cast<T>(1e-4))
      : lr_(lr), m_(params.zeros_like()), v_(params.zeros_like()) {}

  T lr() const { return lr_; }
  long long steps() const { return step_; }

  // `frozen` tensors are skipped (their moments stay zero as well).
  void step(ParamStore<T>& params, const ParamStore<T>& grads,
            const std::set<std::string>& frozen = {}) {
    ++step_;
    const T bc1 = T(1) - std::pow(beta1_, static_cast<T>(step_));
    const T bc2 = T(1) - std::pow(beta2_, static_cast<T>(step_));
    for (const std::string& name : params.names()) {
      if (frozen.count(name)) continue;
      Tensor<T>& p = params.get(name);
      const Tensor<T>& g = grads.get(name);
      if (!p.same_shape(g))
        throw std::invalid_argument("gradient shape mismatch for \"" + name + "\"");
      Tensor<T>& m = m_.get(name);
      Tensor<T>& v = v_.get(name);
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = beta1_ * m[i] + (T(1) - beta1_) * g[i];
        v[i] = beta2_ * v[i] + (T(1) - beta2_) * g[i] * g[i];
        const T m_hat = m[i] / bc1;
        const T v_hat = v[i] / bc2;
        p[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
      }
    }
  }

 private:
  T lr_;
  T beta1_ = static_cast<T>(0.9);
  T beta2_ = static_cast<T>(0.999);
  T eps_ = static_cast<T>(1e-8);
  long long step_ = 0;
  ParamStore<T> m_, v_;
};

}  // namespace convsat
