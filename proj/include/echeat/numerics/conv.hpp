#pragma once

#include <algorithm>

#include "echeat/numerics/linalg.hpp"

namespace echeat {

// 1-D convolution and average pooling over the length axis with "same"
// padding. Inputs are [c x len] or [b x c x len]; weights are
// [c_out x c_in x k]. Output length is always ceil(len / stride).

inline std::size_t same_output_length(std::size_t len, std::size_t stride) {
  return (len + stride - 1) / stride;
}

struct ConvGeometry {
  std::size_t batch = 1;
  std::size_t c_in = 0;
  std::size_t len = 0;
  std::size_t c_out = 0;
  std::size_t k = 0;
  std::size_t stride = 1;
  std::size_t out_len = 0;
  std::size_t pad_left = 0;
};

namespace detail {

inline ConvGeometry conv_geometry(const Tensor& x, const Tensor& w, std::size_t stride) {
  if (stride < 1) throw DimensionError("conv1d: stride must be >= 1");
  const std::size_t axis = channel_axis(x);
  if (w.rank() != 3 || w.dim(1) != x.dim(axis)) {
    throw DimensionError("conv1d: weight " + shape_string(w.shape()) + " does not match input " +
                         shape_string(x.shape()));
  }
  ConvGeometry g;
  g.batch = axis == 1 ? x.dim(0) : 1;
  g.c_in = x.dim(axis);
  g.len = x.shape().back();
  g.c_out = w.dim(0);
  g.k = w.dim(2);
  g.stride = stride;
  g.out_len = same_output_length(g.len, stride);
  const std::size_t needed = (g.out_len - 1) * stride + g.k;
  const std::size_t pad_total = needed > g.len ? needed - g.len : 0;
  if (g.k > g.len + pad_total) {
    throw DimensionError("conv1d: kernel width " + std::to_string(g.k) + " exceeds padded input " +
                         std::to_string(g.len + pad_total));
  }
  g.pad_left = pad_total / 2;
  return g;
}

inline Shape conv_out_shape(const Tensor& x, const ConvGeometry& g) {
  return x.rank() == 3 ? Shape{g.batch, g.c_out, g.out_len} : Shape{g.c_out, g.out_len};
}

// cols[(ci*k + j), t] = x[ci, t*stride + j - pad_left] (zero outside).
inline void im2col(const double* x, const ConvGeometry& g, RowMatrix& cols) {
  cols.setZero(static_cast<Eigen::Index>(g.c_in * g.k), static_cast<Eigen::Index>(g.out_len));
  for (std::size_t ci = 0; ci < g.c_in; ++ci) {
    const double* row = x + ci * g.len;
    for (std::size_t j = 0; j < g.k; ++j) {
      double* dst = cols.data() + (ci * g.k + j) * g.out_len;
      for (std::size_t t = 0; t < g.out_len; ++t) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * g.stride + j) -
                                   static_cast<std::ptrdiff_t>(g.pad_left);
        if (src >= 0 && src < static_cast<std::ptrdiff_t>(g.len)) dst[t] = row[src];
      }
    }
  }
}

inline void col2im(const RowMatrix& cols, const ConvGeometry& g, double* dx) {
  for (std::size_t ci = 0; ci < g.c_in; ++ci) {
    double* row = dx + ci * g.len;
    for (std::size_t j = 0; j < g.k; ++j) {
      const double* src = cols.data() + (ci * g.k + j) * g.out_len;
      for (std::size_t t = 0; t < g.out_len; ++t) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * g.stride + j) -
                                   static_cast<std::ptrdiff_t>(g.pad_left);
        if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(g.len)) row[pos] += src[t];
      }
    }
  }
}

}  // namespace detail

inline Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor* bias, std::size_t stride) {
  const ConvGeometry g = detail::conv_geometry(x, w, stride);
  if (bias && (bias->rank() != 1 || bias->dim(0) != g.c_out)) {
    throw DimensionError("conv1d: bias " + shape_string(bias->shape()) + " does not match weight " +
                         shape_string(w.shape()));
  }
  Tensor out(detail::conv_out_shape(x, g));
  const auto wm = as_matrix(w, g.c_out, g.c_in * g.k);
  RowMatrix cols;
  for (std::size_t b = 0; b < g.batch; ++b) {
    detail::im2col(x.raw() + b * g.c_in * g.len, g, cols);
    MatrixView o(out.raw() + b * g.c_out * g.out_len, static_cast<Eigen::Index>(g.c_out),
                 static_cast<Eigen::Index>(g.out_len));
    o.noalias() = wm * cols;
    if (bias) {
      for (std::size_t co = 0; co < g.c_out; ++co) o.row(static_cast<Eigen::Index>(co)).array() += (*bias)[co];
    }
  }
  return out;
}

inline Tensor conv1d(const Tensor& x, const Tensor& w, std::size_t stride) {
  return conv1d(x, w, nullptr, stride);
}

struct Conv1dGrads {
  Tensor grad_x;
  Tensor grad_w;
  Tensor grad_b;  // sum of upstream gradient per output channel
};

/// Exact transpose of the forward linear map.
inline Conv1dGrads conv1d_backward(const Tensor& x, const Tensor& w, std::size_t stride,
                                   const Tensor& grad_out) {
  const ConvGeometry g = detail::conv_geometry(x, w, stride);
  if (grad_out.shape() != detail::conv_out_shape(x, g)) {
    throw DimensionError("conv1d_backward: upstream gradient " + shape_string(grad_out.shape()) +
                         " does not match output " + shape_string(detail::conv_out_shape(x, g)));
  }
  Conv1dGrads grads{Tensor(x.shape()), Tensor(w.shape()), Tensor({g.c_out})};
  const auto wm = as_matrix(w, g.c_out, g.c_in * g.k);
  auto gw = as_matrix(grads.grad_w, g.c_out, g.c_in * g.k);
  RowMatrix cols;
  RowMatrix dcols;
  for (std::size_t b = 0; b < g.batch; ++b) {
    detail::im2col(x.raw() + b * g.c_in * g.len, g, cols);
    ConstMatrixView go(grad_out.raw() + b * g.c_out * g.out_len, static_cast<Eigen::Index>(g.c_out),
                       static_cast<Eigen::Index>(g.out_len));
    gw.noalias() += go * cols.transpose();
    dcols.noalias() = wm.transpose() * go;
    detail::col2im(dcols, g, grads.grad_x.raw() + b * g.c_in * g.len);
    for (std::size_t co = 0; co < g.c_out; ++co) grads.grad_b[co] += go.row(static_cast<Eigen::Index>(co)).sum();
  }
  return grads;
}

/// Non-overlapping average pooling with window == stride. A trailing partial
/// window is averaged over its actual size.
inline Tensor avgpool1d(const Tensor& x, std::size_t stride) {
  if (stride < 1) throw DimensionError("avgpool1d: stride must be >= 1");
  channel_axis(x);
  const std::size_t rows = x.size() / x.shape().back();
  const std::size_t len = x.shape().back();
  const std::size_t out_len = same_output_length(len, stride);
  Shape shape = x.shape();
  shape.back() = out_len;
  Tensor out(shape);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = x.raw() + r * len;
    double* dst = out.raw() + r * out_len;
    for (std::size_t t = 0; t < out_len; ++t) {
      const std::size_t begin = t * stride;
      const std::size_t end = std::min(len, begin + stride);
      double sum = 0.0;
      for (std::size_t i = begin; i < end; ++i) sum += src[i];
      dst[t] = sum / static_cast<double>(end - begin);
    }
  }
  return out;
}

inline Tensor avgpool1d_backward(const Shape& input_shape, std::size_t stride, const Tensor& grad_out) {
  const std::size_t len = input_shape.back();
  const std::size_t out_len = same_output_length(len, stride);
  const std::size_t rows = shape_size(input_shape) / len;
  if (grad_out.size() != rows * out_len) {
    throw DimensionError("avgpool1d_backward: upstream gradient " + shape_string(grad_out.shape()) +
                         " does not match input " + shape_string(input_shape));
  }
  Tensor gx(input_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* g = grad_out.raw() + r * out_len;
    double* dst = gx.raw() + r * len;
    for (std::size_t t = 0; t < out_len; ++t) {
      const std::size_t begin = t * stride;
      const std::size_t end = std::min(len, begin + stride);
      const double share = g[t] / static_cast<double>(end - begin);
      for (std::size_t i = begin; i < end; ++i) dst[i] += share;
    }
  }
  return gx;
}

}  // namespace echeat
