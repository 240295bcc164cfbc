#pragma once

#include <cmath>
#include <optional>

#include "echeat/numerics/linalg.hpp"

namespace echeat {

// LSTM with input/forget/output sigmoid gates and a tanh candidate.
// Stacked gate weights use row blocks in the order (input, forget,
// candidate, output):
//   w_x  [4H x in], w_h [4H x H], bias [4H]
//   c_t = f * c_{t-1} + i * g
//   h_t = o * tanh(c_t)

struct LstmWeights {
  const Tensor& w_x;
  const Tensor& w_h;
  const Tensor& bias;

  std::size_t hidden() const { return w_h.dim(1); }
  std::size_t input() const { return w_x.dim(1); }
};

/// Everything the backward pass needs. Rows are time-major: row t*batch + i.
struct LstmSequenceCache {
  std::size_t batch = 0;
  std::size_t len = 0;
  std::size_t input = 0;
  std::size_t hidden = 0;
  RowMatrix x;      // [(len*batch) x in]
  RowMatrix gates;  // activated gates [(len*batch) x 4H]
  RowMatrix c;      // cell states
  RowMatrix h;      // hidden states
  RowMatrix tanh_c;
  RowMatrix h0;  // [batch x H]
  RowMatrix c0;
};

struct LstmSequenceGrads {
  Tensor grad_x;  // [b x in x len]
  Tensor grad_w_x;
  Tensor grad_w_h;
  Tensor grad_bias;
  Tensor grad_h0;  // [b x H]
  Tensor grad_c0;
};

namespace detail {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline void check_lstm_weights(const LstmWeights& w) {
  if (w.w_x.rank() != 2 || w.w_h.rank() != 2 || w.bias.rank() != 1) {
    throw DimensionError("lstm: weights must be w_x[4H x in], w_h[4H x H], bias[4H]");
  }
  const std::size_t h = w.w_h.dim(1);
  if (w.w_h.dim(0) != 4 * h || w.w_x.dim(0) != 4 * h || w.bias.dim(0) != 4 * h) {
    throw DimensionError("lstm: inconsistent gate shapes w_x " + shape_string(w.w_x.shape()) + ", w_h " +
                         shape_string(w.w_h.shape()) + ", bias " + shape_string(w.bias.shape()));
  }
}

}  // namespace detail

/// Runs the cell over the length axis of x [b x in x len]; returns the hidden
/// sequence [b x H x len]. Initial states default to zero.
inline Tensor lstm_sequence_forward(const Tensor& x, const LstmWeights& w, LstmSequenceCache* cache,
                                    const Tensor* h0 = nullptr, const Tensor* c0 = nullptr) {
  detail::check_lstm_weights(w);
  if (x.rank() != 3 || x.dim(1) != w.input()) {
    throw DimensionError("lstm: input " + shape_string(x.shape()) + " does not match w_x " +
                         shape_string(w.w_x.shape()));
  }
  const std::size_t batch = x.dim(0), in = x.dim(1), len = x.dim(2), hidden = w.hidden();
  const auto bi = static_cast<Eigen::Index>(batch);
  const auto hi = static_cast<Eigen::Index>(hidden);
  for (const Tensor* s : {h0, c0}) {
    if (s && (s->rank() != 2 || s->dim(0) != batch || s->dim(1) != hidden)) {
      throw DimensionError("lstm: state " + shape_string(s->shape()) + " does not match hidden size " +
                           std::to_string(hidden) + " with batch " + std::to_string(batch));
    }
  }

  LstmSequenceCache local;
  LstmSequenceCache& cc = cache ? *cache : local;
  cc.batch = batch;
  cc.len = len;
  cc.input = in;
  cc.hidden = hidden;
  cc.x.resize(static_cast<Eigen::Index>(len * batch), static_cast<Eigen::Index>(in));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t ch = 0; ch < in; ++ch) {
      const double* src = x.raw() + (b * in + ch) * len;
      for (std::size_t t = 0; t < len; ++t) cc.x(static_cast<Eigen::Index>(t * batch + b), static_cast<Eigen::Index>(ch)) = src[t];
    }
  }
  cc.h0 = h0 ? RowMatrix(as_matrix(*h0)) : RowMatrix::Zero(bi, hi);
  cc.c0 = c0 ? RowMatrix(as_matrix(*c0)) : RowMatrix::Zero(bi, hi);

  const auto wx = as_matrix(w.w_x);
  const auto wh = as_matrix(w.w_h);
  const Eigen::Map<const Eigen::RowVectorXd> bias(w.bias.raw(), static_cast<Eigen::Index>(4 * hidden));

  cc.gates.noalias() = cc.x * wx.transpose();
  cc.gates.rowwise() += bias;
  cc.c.resize(static_cast<Eigen::Index>(len * batch), hi);
  cc.h.resize(static_cast<Eigen::Index>(len * batch), hi);
  cc.tanh_c.resize(static_cast<Eigen::Index>(len * batch), hi);

  RowMatrix rec(bi, 4 * hi);
  for (std::size_t t = 0; t < len; ++t) {
    const auto row0 = static_cast<Eigen::Index>(t * batch);
    if (t == 0) {
      rec.noalias() = cc.h0 * wh.transpose();
    } else {
      rec.noalias() = cc.h.middleRows(row0 - bi, bi) * wh.transpose();
    }
    auto gt = cc.gates.middleRows(row0, bi);
    gt += rec;
    for (Eigen::Index r = 0; r < bi; ++r) {
      double* g = gt.row(r).data();
      for (Eigen::Index j = 0; j < hi; ++j) {
        g[j] = detail::sigmoid(g[j]);
        g[hi + j] = detail::sigmoid(g[hi + j]);
        g[2 * hi + j] = std::tanh(g[2 * hi + j]);
        g[3 * hi + j] = detail::sigmoid(g[3 * hi + j]);
      }
      const double* c_prev = t == 0 ? cc.c0.row(r).data() : cc.c.row(row0 - bi + r).data();
      double* c = cc.c.row(row0 + r).data();
      double* tc = cc.tanh_c.row(row0 + r).data();
      double* h = cc.h.row(row0 + r).data();
      for (Eigen::Index j = 0; j < hi; ++j) {
        c[j] = g[hi + j] * c_prev[j] + g[j] * g[2 * hi + j];
        tc[j] = std::tanh(c[j]);
        h[j] = g[3 * hi + j] * tc[j];
      }
    }
  }

  Tensor out({batch, hidden, len});
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      const double* h = cc.h.row(static_cast<Eigen::Index>(t * batch + b)).data();
      for (std::size_t j = 0; j < hidden; ++j) out.raw()[(b * hidden + j) * len + t] = h[j];
    }
  }
  return out;
}

/// Backpropagation through time. grad_h is [b x H x len]; optional gradients
/// flowing into the final cell/hidden state are added at the last step.
inline LstmSequenceGrads lstm_sequence_backward(const LstmSequenceCache& cc, const LstmWeights& w,
                                                const Tensor& grad_h, const Tensor* grad_c_last = nullptr) {
  detail::check_lstm_weights(w);
  const std::size_t batch = cc.batch, len = cc.len, in = cc.input, hidden = cc.hidden;
  if (grad_h.shape() != Shape{batch, hidden, len}) {
    throw DimensionError("lstm backward: upstream gradient " + shape_string(grad_h.shape()) +
                         " does not match output " + shape_string({batch, hidden, len}));
  }
  const auto bi = static_cast<Eigen::Index>(batch);
  const auto hi = static_cast<Eigen::Index>(hidden);
  const auto wx = as_matrix(w.w_x);
  const auto wh = as_matrix(w.w_h);

  RowMatrix dz(static_cast<Eigen::Index>(len * batch), 4 * hi);
  RowMatrix dh_next = RowMatrix::Zero(bi, hi);
  RowMatrix dc_next = grad_c_last ? RowMatrix(as_matrix(*grad_c_last)) : RowMatrix::Zero(bi, hi);

  for (std::size_t tt = len; tt-- > 0;) {
    const auto row0 = static_cast<Eigen::Index>(tt * batch);
    for (Eigen::Index r = 0; r < bi; ++r) {
      const double* g = cc.gates.row(row0 + r).data();
      const double* tc = cc.tanh_c.row(row0 + r).data();
      const double* c_prev = tt == 0 ? cc.c0.row(r).data() : cc.c.row(row0 - bi + r).data();
      double* d = dz.row(row0 + r).data();
      double* dhn = dh_next.row(r).data();
      double* dcn = dc_next.row(r).data();
      for (Eigen::Index j = 0; j < hi; ++j) {
        const double dh = grad_h.raw()[(static_cast<std::size_t>(r) * hidden + static_cast<std::size_t>(j)) * len + tt] + dhn[j];
        const double i = g[j], f = g[hi + j], cand = g[2 * hi + j], o = g[3 * hi + j];
        const double d_o = dh * tc[j];
        const double dc = dh * o * (1.0 - tc[j] * tc[j]) + dcn[j];
        d[j] = dc * cand * i * (1.0 - i);
        d[hi + j] = dc * c_prev[j] * f * (1.0 - f);
        d[2 * hi + j] = dc * i * (1.0 - cand * cand);
        d[3 * hi + j] = d_o * o * (1.0 - o);
        dcn[j] = dc * f;
      }
    }
    dh_next.noalias() = dz.middleRows(row0, bi) * wh;
  }

  LstmSequenceGrads grads{Tensor({batch, in, len}), Tensor(w.w_x.shape()), Tensor(w.w_h.shape()),
                          Tensor(w.bias.shape()), Tensor({batch, hidden}), Tensor({batch, hidden})};
  as_matrix(grads.grad_w_x).noalias() = dz.transpose() * cc.x;
  auto gwh = as_matrix(grads.grad_w_h);
  gwh.noalias() = dz.topRows(bi).transpose() * cc.h0;
  if (len > 1) {
    const auto rest = static_cast<Eigen::Index>((len - 1) * batch);
    gwh.noalias() += dz.bottomRows(rest).transpose() * cc.h.topRows(rest);
  }
  Eigen::Map<Eigen::RowVectorXd>(grads.grad_bias.raw(), 4 * hi) = dz.colwise().sum();
  const RowMatrix dx = dz * wx;
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      const double* src = dx.row(static_cast<Eigen::Index>(t * batch + b)).data();
      for (std::size_t ch = 0; ch < in; ++ch) grads.grad_x.raw()[(b * in + ch) * len + t] = src[ch];
    }
  }
  as_matrix(grads.grad_h0) = dh_next;
  as_matrix(grads.grad_c0) = dc_next;
  return grads;
}

struct LstmCellOutput {
  Tensor h;  // [b x H]
  Tensor c;
  LstmSequenceCache cache;
};

/// One step. x is [b x in]; h_prev and c_prev are [b x H].
inline LstmCellOutput lstm_cell(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                                const LstmWeights& w) {
  detail::check_lstm_weights(w);
  if (x.rank() != 2) throw DimensionError("lstm_cell: input must be [b x in], got " + shape_string(x.shape()));
  const std::size_t batch = x.dim(0), hidden = w.hidden();
  if (h_prev.shape() != Shape{batch, hidden} || c_prev.shape() != Shape{batch, hidden}) {
    throw DimensionError("lstm_cell: state shapes " + shape_string(h_prev.shape()) + ", " +
                         shape_string(c_prev.shape()) + " do not match hidden size " + std::to_string(hidden));
  }
  LstmCellOutput out;
  const Tensor seq = x.reshaped({batch, x.dim(1), 1});
  Tensor h = lstm_sequence_forward(seq, w, &out.cache, &h_prev, &c_prev);
  out.h = h.reshaped({batch, hidden});
  out.c = from_matrix(out.cache.c);
  return out;
}

struct LstmCellGrads {
  Tensor grad_x;
  Tensor grad_h_prev;
  Tensor grad_c_prev;
  Tensor grad_w_x;
  Tensor grad_w_h;
  Tensor grad_bias;
};

inline LstmCellGrads lstm_cell_backward(const LstmCellOutput& fwd, const LstmWeights& w, const Tensor& grad_h,
                                        const Tensor& grad_c) {
  const std::size_t batch = fwd.cache.batch, hidden = fwd.cache.hidden;
  auto g = lstm_sequence_backward(fwd.cache, w, grad_h.reshaped({batch, hidden, 1}), &grad_c);
  return {g.grad_x.reshaped({batch, fwd.cache.input}), std::move(g.grad_h0), std::move(g.grad_c0),
          std::move(g.grad_w_x), std::move(g.grad_w_h), std::move(g.grad_bias)};
}

}  // namespace echeat
