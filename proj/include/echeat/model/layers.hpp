#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "echeat/numerics.hpp"

namespace echeat {

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
inline Tensor xavier_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Prng& rng) {
  Tensor t(std::move(shape));
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.data()) v = rng.uniform_real(-a, a);
  return t;
}

/// Conv1d with bias, "same" padding.
class ConvLayer {
 public:
  ConvLayer() = default;
  ConvLayer(const std::string& name, std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t stride,
            Prng& rng)
      : w(name + ".w", xavier_uniform({c_out, c_in, k}, c_in * k, c_out * k, rng)),
        b(name + ".b", Tensor({c_out})),
        stride_(stride) {}

  Tensor infer(const Tensor& x) const { return conv1d(x, w.value, &b.value, stride_); }

  Tensor forward(const Tensor& x) {
    x_ = x;
    return infer(x);
  }

  Tensor backward(const Tensor& grad_out) {
    auto g = conv1d_backward(x_, w.value, stride_, grad_out);
    as_matrix(w.grad, w.grad.size(), 1) += as_matrix(g.grad_w, g.grad_w.size(), 1);
    as_matrix(b.grad, b.grad.size(), 1) += as_matrix(g.grad_b, g.grad_b.size(), 1);
    return std::move(g.grad_x);
  }

  void collect(std::vector<Parameter*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }

  std::size_t out_channels() const { return w.value.dim(0); }

  Parameter w;
  Parameter b;

 private:
  std::size_t stride_ = 1;
  Tensor x_;
};

/// LSTM over the length axis of a [b x c x len] input, emitting [b x H x len].
class LstmLayer {
 public:
  LstmLayer() = default;
  LstmLayer(const std::string& name, std::size_t in, std::size_t hidden, Prng& rng)
      : w_x(name + ".w_x", xavier_uniform({4 * hidden, in}, in, hidden, rng)),
        w_h(name + ".w_h", xavier_uniform({4 * hidden, hidden}, hidden, hidden, rng)),
        bias(name + ".bias", Tensor({4 * hidden})) {
    for (std::size_t j = hidden; j < 2 * hidden; ++j) bias.value[j] = 1.0;  // forget gate
  }

  Tensor infer(const Tensor& x) const { return lstm_sequence_forward(x, weights(), nullptr); }

  Tensor forward(const Tensor& x) { return lstm_sequence_forward(x, weights(), &cache_); }

  Tensor backward(const Tensor& grad_h) {
    auto g = lstm_sequence_backward(cache_, weights(), grad_h);
    add_into(w_x.grad, g.grad_w_x);
    add_into(w_h.grad, g.grad_w_h);
    add_into(bias.grad, g.grad_bias);
    return std::move(g.grad_x);
  }

  void collect(std::vector<Parameter*>& out) {
    out.push_back(&w_x);
    out.push_back(&w_h);
    out.push_back(&bias);
  }

  std::size_t hidden() const { return w_h.value.dim(1); }

  Parameter w_x;
  Parameter w_h;
  Parameter bias;

 private:
  LstmWeights weights() const { return {w_x.value, w_h.value, bias.value}; }
  static void add_into(Tensor& dst, const Tensor& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }

  LstmSequenceCache cache_;
};

/// y = x W^T + b on [b x in] rows.
class AffineLayer {
 public:
  AffineLayer() = default;
  AffineLayer(const std::string& name, std::size_t in, std::size_t out, Prng& rng)
      : w(name + ".w", xavier_uniform({out, in}, in, out, rng)), b(name + ".b", Tensor({out})) {}

  Tensor infer(const Tensor& x) const {
    if (x.rank() != 2 || x.dim(1) != w.value.dim(1)) {
      throw DimensionError("affine: input " + shape_string(x.shape()) + " does not match weight " +
                           shape_string(w.value.shape()));
    }
    Tensor y({x.dim(0), w.value.dim(0)});
    auto ym = as_matrix(y);
    ym.noalias() = as_matrix(x) * as_matrix(w.value).transpose();
    ym.rowwise() += as_matrix(b.value, 1, b.value.size()).row(0);
    return y;
  }

  Tensor forward(const Tensor& x) {
    x_ = x;
    return infer(x);
  }

  Tensor backward(const Tensor& grad_out) {
    const auto go = as_matrix(grad_out);
    as_matrix(w.grad).noalias() += go.transpose() * as_matrix(x_);
    as_matrix(b.grad, 1, b.grad.size()) += go.colwise().sum();
    Tensor gx(x_.shape());
    as_matrix(gx).noalias() = go * as_matrix(w.value);
    return gx;
  }

  void collect(std::vector<Parameter*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }

  Parameter w;
  Parameter b;

 private:
  Tensor x_;
};

/// ReLU followed by inverted dropout, with the masks kept for backward.
class ReluDropout {
 public:
  explicit ReluDropout(double rate = 0.0) : rate_(rate) {}

  Tensor infer(const Tensor& x) const { return relu(x); }

  Tensor forward(const Tensor& x, Prng& rng, bool training) {
    pre_ = x;
    return dropout(relu(x), rate_, training, rng, &mask_);
  }

  Tensor backward(const Tensor& grad_out) const {
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask_[i];
    return relu_backward(pre_, g);
  }

 private:
  double rate_ = 0.0;
  Tensor pre_;
  Tensor mask_;
};

}  // namespace echeat
