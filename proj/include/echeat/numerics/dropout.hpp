#pragma once

#include "echeat/numerics/prng.hpp"
#include "echeat/numerics/tensor.hpp"

namespace echeat {

/// Inverted dropout. In training mode each element is zeroed with
/// probability `rate` and survivors are scaled by 1/(1-rate). The applied
/// multiplier is written to `mask` when given (identity mask at inference).
inline Tensor dropout(const Tensor& x, double rate, bool training, Prng& rng, Tensor* mask = nullptr) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ValidationError("dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) {
    if (mask) *mask = Tensor::filled(x.shape(), 1.0);
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor out = x;
  Tensor m(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    m[i] = rng.uniform01() < rate ? 0.0 : keep_scale;
    out[i] *= m[i];
  }
  if (mask) *mask = std::move(m);
  return out;
}

}  // namespace echeat
