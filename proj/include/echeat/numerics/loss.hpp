#pragma once

#include <algorithm>
#include <cmath>

#include "echeat/numerics/tensor.hpp"

namespace echeat {

/// Row-wise softmax with max-subtraction.
inline Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 2) throw DimensionError("softmax: expected [batch x C], got " + shape_string(logits.shape()));
  const std::size_t rows = logits.dim(0), cols = logits.dim(1);
  Tensor out(logits.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* y = logits.raw() + r * cols;
    double* p = out.raw() + r * cols;
    const double mx = *std::max_element(y, y + cols);
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      p[j] = std::exp(y[j] - mx);
      sum += p[j];
    }
    for (std::size_t j = 0; j < cols; ++j) p[j] /= sum;
  }
  return out;
}

struct CrossEntropy {
  double loss = 0.0;  // summed over rows
  Tensor grad;        // d loss / d logits = softmax(Y) - L
  Tensor probabilities;
};

/// Softmax cross-entropy summed over samples. `targets` is one-hot [E x C].
inline CrossEntropy cross_entropy(const Tensor& logits, const Tensor& targets) {
  require_same_shape(logits, targets, "cross_entropy");
  const std::size_t rows = logits.dim(0), cols = logits.dim(1);
  CrossEntropy ce;
  ce.probabilities = softmax(logits);
  ce.grad = ce.probabilities;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* y = logits.raw() + r * cols;
    const double* l = targets.raw() + r * cols;
    const double mx = *std::max_element(y, y + cols);
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) sum += std::exp(y[j] - mx);
    const double log_norm = mx + std::log(sum);
    double ones = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      if (l[j] != 0.0 && l[j] != 1.0) throw ValidationError("cross_entropy: targets must be one-hot");
      ones += l[j];
      if (l[j] == 1.0) ce.loss -= y[j] - log_norm;
      ce.grad.raw()[r * cols + j] -= l[j];
    }
    if (ones != 1.0) throw ValidationError("cross_entropy: target row " + std::to_string(r) + " is not one-hot");
  }
  return ce;
}

inline Tensor one_hot(std::span<const std::size_t> classes, std::size_t num_classes) {
  Tensor t({classes.size(), num_classes});
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] >= num_classes) throw ValidationError("one_hot: class index out of range");
    t.at(i, classes[i]) = 1.0;
  }
  return t;
}

}  // namespace echeat
