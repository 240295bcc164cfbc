#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "echeat/numerics/tensor.hpp"

namespace echeat {

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;  // decoupled
};

/// One bias-corrected Adam update at step t (1-based). Weight decay is
/// applied directly to the weights before the moment update and never enters
/// m or v.
inline void adam_step(std::span<Parameter* const> params, std::uint64_t t, const AdamConfig& cfg) {
  if (t == 0) throw std::invalid_argument("adam_step: step counter is 1-based");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  const double decay = cfg.lr * cfg.weight_decay;
  for (Parameter* p : params) {
    double* w = p->value.raw();
    const double* g = p->grad.raw();
    double* m = p->m.raw();
    double* v = p->v.raw();
    const std::size_t n = p->value.size();
    for (std::size_t i = 0; i < n; ++i) {
      w[i] -= decay * w[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      w[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

}  // namespace echeat
