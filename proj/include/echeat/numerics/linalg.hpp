#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <span>
#include <vector>

#include "echeat/numerics/tensor.hpp"

namespace echeat {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;

inline MatrixView as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatrixView(t.raw(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
inline ConstMatrixView as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatrixView(t.raw(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
inline MatrixView as_matrix(Tensor& t) {
  if (t.rank() != 2) throw DimensionError("expected rank-2 tensor, got " + shape_string(t.shape()));
  return as_matrix(t, t.dim(0), t.dim(1));
}
inline ConstMatrixView as_matrix(const Tensor& t) {
  if (t.rank() != 2) throw DimensionError("expected rank-2 tensor, got " + shape_string(t.shape()));
  return as_matrix(t, t.dim(0), t.dim(1));
}

inline Tensor from_matrix(const RowMatrix& m) {
  Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  as_matrix(t) = m;
  return t;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: shape mismatch " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Tensor out({a.dim(0), b.dim(1)});
  as_matrix(out).noalias() = as_matrix(a) * as_matrix(b);
  return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
  return out;
}

inline Tensor scale(const Tensor& a, double s) {
  Tensor out = a;
  for (double& x : out.data()) x *= s;
  return out;
}

inline Tensor relu(const Tensor& a) {
  Tensor out = a;
  for (double& x : out.data()) x = x > 0.0 ? x : 0.0;
  return out;
}

/// Gradient of relu given its input and the upstream gradient.
inline Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  require_same_shape(input, grad_out, "relu_backward");
  Tensor g = grad_out;
  auto in = input.data();
  auto gd = g.data();
  for (std::size_t i = 0; i < gd.size(); ++i) {
    if (!(in[i] > 0.0)) gd[i] = 0.0;
  }
  return g;
}

// Channel-axis helpers. Tensors are [channels x len] per sample or
// [batch x channels x len]; the channel axis is always rank-2.

inline std::size_t channel_axis(const Tensor& t) {
  if (t.rank() != 2 && t.rank() != 3) {
    throw DimensionError("expected [c x len] or [b x c x len], got " + shape_string(t.shape()));
  }
  return t.rank() - 2;
}

/// Stacks operands along the channel axis, preserving operand order.
inline Tensor concat_channels(std::span<const Tensor* const> parts) {
  if (parts.empty()) throw DimensionError("concat_channels: no operands");
  const Tensor& first = *parts.front();
  const std::size_t axis = channel_axis(first);
  const std::size_t batch = axis == 1 ? first.dim(0) : 1;
  const std::size_t len = first.shape().back();
  std::size_t channels = 0;
  for (const Tensor* p : parts) {
    if (p->rank() != first.rank() || p->shape().back() != len || (axis == 1 && p->dim(0) != batch)) {
      throw DimensionError("concat_channels: shape mismatch " + shape_string(first.shape()) + " vs " +
                           shape_string(p->shape()));
    }
    channels += p->dim(axis);
  }
  Shape shape = axis == 1 ? Shape{batch, channels, len} : Shape{channels, len};
  Tensor out(shape);
  double* dst = out.raw();
  for (std::size_t b = 0; b < batch; ++b) {
    for (const Tensor* p : parts) {
      const std::size_t block = p->dim(axis) * len;
      std::copy_n(p->raw() + b * block, block, dst);
      dst += block;
    }
  }
  return out;
}

inline Tensor concat_channels(const std::vector<Tensor>& parts) {
  std::vector<const Tensor*> ptrs;
  ptrs.reserve(parts.size());
  for (const auto& p : parts) ptrs.push_back(&p);
  return concat_channels(std::span<const Tensor* const>(ptrs));
}

/// Inverse of concat_channels for one operand.
inline Tensor slice_channels(const Tensor& t, std::size_t begin, std::size_t count) {
  const std::size_t axis = channel_axis(t);
  const std::size_t channels = t.dim(axis);
  if (count == 0 || begin + count > channels) {
    throw DimensionError("slice_channels: range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + shape_string(t.shape()));
  }
  const std::size_t batch = axis == 1 ? t.dim(0) : 1;
  const std::size_t len = t.shape().back();
  Shape shape = axis == 1 ? Shape{batch, count, len} : Shape{count, len};
  Tensor out(shape);
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy_n(t.raw() + (b * channels + begin) * len, count * len, out.raw() + b * count * len);
  }
  return out;
}

/// Adds `src` into channels [begin, begin + src channels) of `dst`.
inline void accumulate_channels(Tensor& dst, std::size_t begin, const Tensor& src) {
  const std::size_t axis = channel_axis(dst);
  const std::size_t channels = dst.dim(axis);
  const std::size_t count = src.dim(axis);
  const std::size_t batch = axis == 1 ? dst.dim(0) : 1;
  const std::size_t len = dst.shape().back();
  if (begin + count > channels || src.shape().back() != len) {
    throw DimensionError("accumulate_channels: shape mismatch " + shape_string(dst.shape()) + " vs " +
                         shape_string(src.shape()));
  }
  for (std::size_t b = 0; b < batch; ++b) {
    double* d = dst.raw() + (b * channels + begin) * len;
    const double* s = src.raw() + b * count * len;
    for (std::size_t i = 0; i < count * len; ++i) d[i] += s[i];
  }
}

}  // namespace echeat
