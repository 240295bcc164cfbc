#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "echeat/numerics/tensor.hpp"

namespace echeat {

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Tensor vectors;              // [d x d], row i is the eigenvector for values[i]
};

/// Cyclic Jacobi rotations on a symmetric matrix. Intended for small d.
inline SymmetricEigen jacobi_eigen(const Tensor& sym, int max_sweeps = 100) {
  if (sym.rank() != 2 || sym.dim(0) != sym.dim(1)) {
    throw DimensionError("jacobi_eigen: expected a square matrix, got " + shape_string(sym.shape()));
  }
  const std::size_t n = sym.dim(0);
  std::vector<double> a(sym.values());
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  auto A = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  auto V = [&](std::size_t i, std::size_t j) -> double& { return v[i * n + j]; };

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
    if (off == 0.0) break;
    double diag = 0.0;
    for (std::size_t p = 0; p < n; ++p) diag += A(p, p) * A(p, p);
    if (off <= 1e-30 * diag) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (apq == 0.0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        A(p, q) = 0.0;
        A(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return A(i, i) > A(j, j); });

  SymmetricEigen out{std::vector<double>(n), Tensor({n, n})};
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t col = order[r];
    out.values[r] = A(col, col);
    // Sign convention: the largest-magnitude entry is positive.
    std::size_t arg = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(V(k, col)) > std::abs(V(arg, col))) arg = k;
    const double sign = V(arg, col) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.vectors.at(r, k) = sign * V(k, col);
  }
  return out;
}

struct PcaModel {
  Tensor components;                    // [k x d], orthonormal rows
  std::vector<double> explained_variance;  // non-increasing
  std::vector<double> mean;             // [d]

  std::size_t dims() const { return mean.size(); }
};

/// Principal components of X [n x d] from the sample covariance (n-1).
inline PcaModel pca_fit(const Tensor& x, std::size_t k) {
  if (x.rank() != 2) throw DimensionError("pca_fit: expected [n x d], got " + shape_string(x.shape()));
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (n < 2) throw ValidationError("pca_fit: need at least 2 samples");
  if (k < 1 || k > d) throw ValidationError("pca_fit: k must be in [1, " + std::to_string(d) + "]");

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x.at(i, j);
  for (double& m : mean) m /= static_cast<double>(n);

  Tensor cov({d, d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      const double da = x.at(i, a) - mean[a];
      for (std::size_t b = a; b < d; ++b) cov.at(a, b) += da * (x.at(i, b) - mean[b]);
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      cov.at(a, b) /= static_cast<double>(n - 1);
      cov.at(b, a) = cov.at(a, b);
    }
  }

  const SymmetricEigen eig = jacobi_eigen(cov);
  PcaModel model{Tensor({k, d}), {}, std::move(mean)};
  for (std::size_t r = 0; r < k; ++r) {
    model.explained_variance.push_back(std::max(0.0, eig.values[r]));
    for (std::size_t c = 0; c < d; ++c) model.components.at(r, c) = eig.vectors.at(r, c);
  }
  return model;
}

/// Coordinates of each row of X in component space: [n x k].
inline Tensor pca_project(const PcaModel& model, const Tensor& x) {
  const std::size_t d = model.dims();
  const std::size_t k = model.components.dim(0);
  if (x.rank() != 2 || x.dim(1) != d) {
    throw DimensionError("pca_project: expected [n x " + std::to_string(d) + "], got " + shape_string(x.shape()));
  }
  Tensor out({x.dim(0), k});
  for (std::size_t i = 0; i < x.dim(0); ++i)
    for (std::size_t r = 0; r < k; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += (x.at(i, c) - model.mean[c]) * model.components.at(r, c);
      out.at(i, r) = s;
    }
  return out;
}

/// Inverse of pca_project (lossless when k == rank of the centered data).
inline Tensor pca_reconstruct(const PcaModel& model, const Tensor& coords) {
  const std::size_t d = model.dims();
  const std::size_t k = model.components.dim(0);
  if (coords.rank() != 2 || coords.dim(1) != k) {
    throw DimensionError("pca_reconstruct: expected [n x " + std::to_string(k) + "], got " +
                         shape_string(coords.shape()));
  }
  Tensor out({coords.dim(0), d});
  for (std::size_t i = 0; i < coords.dim(0); ++i)
    for (std::size_t c = 0; c < d; ++c) {
      double s = model.mean[c];
      for (std::size_t r = 0; r < k; ++r) s += coords.at(i, r) * model.components.at(r, c);
      out.at(i, c) = s;
    }
  return out;
}

}  // namespace echeat
