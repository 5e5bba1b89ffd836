#pragma once

#include <cmath>
#include <vector>

#include "expray/common.hpp"

namespace expray {

/// Growth model F(t) = exp(t) - 1 on [0, inf).
inline double growth_F(double t) {
  if (t < 0.0) fail(Errc::domain_error, "growth_F requires t >= 0");
  double v = std::expm1(t);
  if (!std::isfinite(v)) fail(Errc::overflow_depth, "growth_F overflow at t=" + std::to_string(t));
  return v;
}

/// F^n(t); signals OverflowDepth at the first iterate above `cap`.
inline double growth_F_iter(double t, int n, double cap = kRCap) {
  if (t < 0.0) fail(Errc::domain_error, "growth_F_iter requires t >= 0");
  if (n < 0) fail(Errc::domain_error, "growth_F_iter requires n >= 0");
  double v = t;
  for (int i = 0; i < n; ++i) {
    v = std::expm1(v);
    if (!(v <= cap))
      fail(Errc::overflow_depth, "growth_F_iter exceeded cap at iterate " + std::to_string(i + 1));
  }
  return v;
}

/// n-th iterate of F^{-1}(u) = log(1 + u).
inline double growth_F_inv_iter(double u, int n) {
  if (u < 0.0) fail(Errc::domain_error, "growth_F_inv_iter requires u >= 0");
  if (n < 0) fail(Errc::domain_error, "growth_F_inv_iter requires n >= 0");
  double v = u;
  for (int i = 0; i < n; ++i) v = std::log1p(v);
  return v;
}

/// Forward ladder T_k = F^k(t), k = 0..m, truncated at the first value
/// above `cap` (which is not stored) or at `max_len` entries.
inline std::vector<double> growth_ladder(double t, double cap = kRCap,
                                         std::size_t max_len = 4096) {
  std::vector<double> ts;
  ts.reserve(16);
  const double top = std::log1p(cap);  // F(v) <= cap iff v <= log(1 + cap)
  double v = t;
  while (ts.size() < max_len) {
    ts.push_back(v);
    if (v > top) break;
    v = std::expm1(v);
  }
  return ts;
}

}  // namespace expray
