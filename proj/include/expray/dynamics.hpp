#pragma once

#include <cmath>
#include <cstdlib>
#include <vector>

#include "expray/common.hpp"
#include "expray/growth.hpp"

namespace expray {

/// One application of E_kappa: z -> exp(z) + kappa.
inline Cx eval_map(Cx kappa, Cx z, double re_guard = kReGuard) {
  if (z.real() > re_guard)
    fail(Errc::overflow_depth, "eval_map: Re z above overflow guard");
  return std::exp(z) + kappa;
}

/// Conjugacy parameter lambda = exp(kappa).
inline Cx lambda_of_kappa(Cx kappa, double re_guard = kReGuard) {
  if (kappa.real() > re_guard)
    fail(Errc::overflow_depth, "lambda_of_kappa: Re kappa above overflow guard");
  return std::exp(kappa);
}

struct EscapeParams {
  int budget = 1000;
  double r_esc = 50.0;
  int l_confirm = 3;
  double window = 1e3;  // "bounded" only if the whole orbit stayed inside
  double re_guard = kReGuard;
};

struct OrbitRecord {
  enum class Verdict { escaping, bounded, indeterminate };

  Cx kappa;
  std::vector<Cx> points;  // z_0, z_1, ..., z_{n+1} = E_kappa(z_n)
  Verdict verdict = Verdict::indeterminate;
  int detected_at = -1;  // escaping: index where detection fired
  int budget_used = 0;
  int run_length = 0;  // growth-confirmed run length at detection
};

/// Iterate E_kappa from z0 and decide escape. Escape requires l_confirm
/// consecutive indices with Re z > r_esc whose steps are growth-consistent
/// (Re z_{m+1} >= F(Re z_m) - |kappa| - 1); a large Re alone is not enough,
/// since Re E(z) can collapse when Im z sits near an odd multiple of pi.
inline OrbitRecord escape_orbit(Cx kappa, Cx z0, const EscapeParams& p = {}) {
  if (p.budget < 1) fail(Errc::domain_error, "escape_orbit requires budget >= 1");
  OrbitRecord rec;
  rec.kappa = kappa;
  rec.points.reserve(64);
  const double ak = std::abs(kappa);
  Cx z = z0;
  int run = 0;
  double max_abs = 0.0;
  auto growth_ok = [&](Cx prev, Cx cur) {
    if (prev.real() > p.re_guard) return false;
    return cur.real() >= std::expm1(prev.real()) - ak - 1.0;
  };
  for (int n = 0;; ++n) {
    rec.points.push_back(z);
    max_abs = std::max(max_abs, std::abs(z));
    if (z.real() > p.r_esc) {
      run = (run >= 1 && growth_ok(rec.points[n - 1], z)) ? run + 1 : 1;
      if (run >= p.l_confirm) {
        rec.verdict = OrbitRecord::Verdict::escaping;
        rec.detected_at = n;
        rec.run_length = run;
        rec.budget_used = n;
        return rec;
      }
    } else {
      run = 0;
    }
    if (z.real() > p.re_guard) {
      // cannot iterate further; a growth-confirmed arrival counts as escape
      if (run >= 1 && n >= 1 && growth_ok(rec.points[n - 1], z)) {
        rec.verdict = OrbitRecord::Verdict::escaping;
        rec.detected_at = n;
        rec.run_length = run;
      } else {
        rec.verdict = OrbitRecord::Verdict::indeterminate;
      }
      rec.budget_used = n;
      return rec;
    }
    if (n == p.budget) {
      rec.verdict = max_abs <= p.window ? OrbitRecord::Verdict::bounded
                                        : OrbitRecord::Verdict::indeterminate;
      rec.budget_used = n;
      return rec;
    }
    z = std::exp(z) + kappa;
  }
}

/// Strip itinerary of the first `depth` orbit points:
/// s_k = round(Im z_{k-1} / 2pi). BoundaryStrip when an imaginary part is
/// within tol_strip of an odd multiple of pi (address ill-defined).
inline std::vector<long long> orbit_address(const OrbitRecord& rec, int depth,
                                            double tol_strip = 1e-9) {
  if (depth < 1 || (std::size_t)depth > rec.points.size())
    fail(Errc::domain_error, "orbit_address: depth out of range");
  std::vector<long long> out;
  out.reserve(depth);
  for (int k = 1; k <= depth; ++k) {
    double im = rec.points[k - 1].imag();
    double frac = std::remainder(im, kTwoPi);  // in [-pi, pi]
    if (kPi - std::abs(frac) < tol_strip)
      fail(Errc::boundary_strip,
           "orbit point " + std::to_string(k - 1) + " lies on a strip boundary");
    double s = std::nearbyint(im / kTwoPi);
    if (std::abs(s) > 9.0e18)
      fail(Errc::overflow_depth, "orbit_address: entry exceeds integer range");
    out.push_back((long long)s);
  }
  return out;
}

/// Potential of an escaping orbit: t ~ F^{-n}(Re z_n), averaged over the
/// last confirmed indices.
inline double orbit_potential(const OrbitRecord& rec, Cx /*kappa*/) {
  if (rec.verdict != OrbitRecord::Verdict::escaping)
    fail(Errc::domain_error, "orbit_potential needs an escaping orbit");
  int n = rec.detected_at;
  int take = std::min(3, std::max(rec.run_length, 1));
  double sum = 0.0;
  int cnt = 0;
  for (int i = n; i > n - take && i >= 0; --i) {
    double u = std::max(rec.points[i].real(), 0.0);
    sum += growth_F_inv_iter(u, i);
    ++cnt;
  }
  return sum / cnt;
}

}  // namespace expray
