#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "echeat/numerics/prng.hpp"
#include "echeat/numerics/tensor.hpp"

namespace echeat {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// 0 checks every coordinate. Otherwise each parameter is checked on its
  /// `max_coords / 2` largest-magnitude analytic coordinates plus the same
  /// number drawn uniformly from the rest.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

struct ParamGradError {
  std::string name;
  double relative_error = 0.0;
  std::size_t coords_checked = 0;
};

struct GradCheckReport {
  std::vector<ParamGradError> params;
  double max_relative_error = 0.0;
  bool passed = true;
};

namespace detail {

inline std::vector<std::size_t> grad_check_coords(const Parameter& p, const GradCheckOptions& opt, Prng& rng) {
  const std::size_t n = p.value.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (opt.max_coords == 0 || opt.max_coords >= n) return idx;
  const std::size_t top = std::max<std::size_t>(1, opt.max_coords / 2);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(top), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double ga = std::abs(p.grad[a]), gb = std::abs(p.grad[b]);
                      return ga != gb ? ga > gb : a < b;
                    });
  std::vector<std::size_t> rest(idx.begin() + static_cast<std::ptrdiff_t>(top), idx.end());
  idx.resize(top);
  rng.shuffle(rest);
  const std::size_t extra = std::min(rest.size(), opt.max_coords - top);
  idx.insert(idx.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(extra));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

/// Compares the analytic gradients already stored in each Parameter::grad
/// against central differences of `loss`. The closure must read the current
/// parameter values; each probed coordinate is restored bit-exactly.
///
/// Relative error per parameter: |g_a - g_fd| / max(|g_a|, |g_fd|, 1e-12)
/// using Euclidean norms over the checked coordinates.
inline GradCheckReport grad_check(const std::function<double()>& loss, std::span<Parameter* const> params,
                                  const GradCheckOptions& opt = {}) {
  GradCheckReport report;
  Prng rng(opt.seed);
  for (Parameter* p : params) {
    const auto coords = detail::grad_check_coords(*p, opt, rng);
    double diff2 = 0.0, ana2 = 0.0, fd2 = 0.0;
    for (std::size_t i : coords) {
      const double orig = p->value[i];
      p->value[i] = orig + opt.step;
      const double up = loss();
      p->value[i] = orig - opt.step;
      const double down = loss();
      p->value[i] = orig;
      const double fd = (up - down) / (2.0 * opt.step);
      const double ana = p->grad[i];
      diff2 += (ana - fd) * (ana - fd);
      ana2 += ana * ana;
      fd2 += fd * fd;
    }
    const double denom = std::max({std::sqrt(ana2), std::sqrt(fd2), 1e-12});
    const double rel = std::sqrt(diff2) / denom;
    report.params.push_back({p->name, rel, coords.size()});
    report.max_relative_error = std::max(report.max_relative_error, rel);
    if (!(rel < opt.tolerance)) report.passed = false;
  }
  return report;
}

}  // namespace echeat
