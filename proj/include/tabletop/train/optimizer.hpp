#pragma once

#include <cmath>
#include <cstdint>

#include "tabletop/core/param.hpp"

namespace tabletop {

// Adam with conventional defaults; `t` counts applied updates for bias
// correction and is part of the checkpointed state.
struct AdamState {
  std::vector<Tensor> m, v;
  int64_t t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  AdamState() = default;
  explicit AdamState(const ParamStore& p) : m(p.zeros_like()), v(p.zeros_like()) {}

  void step(ParamStore& params, const GradStore& grads, double lr) {
    ++t;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < m.size(); ++i) {
      Tensor& th = params.at(i);
      const Tensor& g = grads.grads[i];
      for (int64_t j = 0; j < th.size(); ++j) {
        double gj = g[j];
        m[i][j] = beta1 * m[i][j] + (1.0 - beta1) * gj;
        v[i][j] = beta2 * v[i][j] + (1.0 - beta2) * gj * gj;
        th[j] -= lr * (m[i][j] / bc1) / (std::sqrt(v[i][j] / bc2) + eps);
      }
    }
  }
};

}  // namespace tabletop
