#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "expray/address.hpp"
#include "expray/common.hpp"
#include "expray/dynamics.hpp"
#include "expray/growth.hpp"

namespace expray {

// Sample flags: the point was computed but is not certified to lie on the
// requested ray (premature-end configurations, Prop-style broken preimages).
inline constexpr unsigned kFlagStripBoundary = 1u;      // a pullback landed on a strip boundary
inline constexpr unsigned kFlagPotentialMismatch = 2u;  // chain potential saturated away from t
inline constexpr unsigned kFlagDepthSpread = 4u;        // depth-capped chain disagrees with itself

struct RaySample {
  ExternalAddress address;
  double t = 0.0;
  Cx value{};
  Cx dvalue_dkappa{};
  int depth = 0;
  double residual = 0.0;
  unsigned flags = 0;

  bool on_ray() const { return flags == 0; }
};

struct PullbackOptions {
  int depth_hint = 64;
  double eps = 1e-11;
  double tol_sing = 1e-12;
  double r_cap = kRCap;
  int max_depth = 4096;
  double onray_tol = 0.2;
};

namespace detail {

struct Chain {
  Cx z0{}, d0{};
  std::vector<Cx> levels;  // levels[k] = z_k, k = 0..N (seed at k = N)
  unsigned flags = 0;
  int depth = 0;
};

struct Seed {
  Cx z{}, d{};
  unsigned flags = 0;
};

inline void branch_checks(Cx w, double im, double tol_sing, unsigned& flags, int level) {
  if (std::abs(w) < tol_sing)
    fail(Errc::singular_hit,
         "pullback passed through the singular value at depth " + std::to_string(level));
  if (kPi - std::abs(im) < 1e-9) flags |= kFlagStripBoundary;
}

/// Principal log with Im in (-pi, pi].
inline Cx principal_log(Cx w) {
  Cx lg = std::log(w);
  if (lg.imag() == -kPi) lg = Cx(lg.real(), kPi);
  return lg;
}

/// Seed at level N obtained by one extra pullback from the (possibly
/// unrepresentable) level N+1. At the depth cap, F^{N+1}(t) and the fast
/// entries exceed double range; the step is then taken on log magnitudes,
/// where the neglected terms are below e^{-200}.
inline Seed virtual_seed(Cx kappa, const ExternalAddress& s, const std::vector<double>& lad,
                         int N, double tol_sing) {
  Seed out;
  const double tN = lad[N];
  const double ofs = s.entry_two_pi(N + 1);
  const double tN1 = tN <= 709.0 ? std::expm1(tN) : std::numeric_limits<double>::infinity();
  const double e2p = s.entry_two_pi(N + 2);
  if (std::isfinite(tN1) && std::isfinite(e2p)) {
    Cx w = Cx(tN1, e2p) - kappa;
    Cx lg = principal_log(w);
    branch_checks(w, lg.imag(), tol_sing, out.flags, N + 1);
    out.z = Cx(lg.real(), lg.imag() + ofs);
    out.d = -1.0 / w;
    return out;
  }
  // log-magnitude form; real part of z_{N+1} - kappa is positive and huge
  double ln_re = std::isfinite(tN1) ? std::log(tN1) : tN;
  double ln_im;
  int sgn;
  if (std::isfinite(e2p)) {
    double im = e2p - kappa.imag();
    sgn = im > 0 ? 1 : (im < 0 ? -1 : 0);
    ln_im = im == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(std::abs(im));
  } else {
    sgn = s.entry_sign(N + 2);
    ln_im = s.log_abs_entry_two_pi(N + 2);
  }
  double ln_rho = ln_im - ln_re;
  double ln_abs, arg;
  if (ln_rho > 40.0) {
    ln_abs = ln_im;
    arg = sgn * (kPi / 2.0);
  } else if (ln_rho < -40.0) {
    ln_abs = ln_re;
    arg = ln_rho < -700.0 ? 0.0 : sgn * std::exp(ln_rho);
  } else {
    double rho = std::exp(ln_rho);
    ln_abs = ln_re + 0.5 * std::log1p(rho * rho);
    arg = sgn * std::atan(rho);
  }
  out.z = Cx(ln_abs, arg + ofs);
  out.d = ln_abs > 700.0 ? Cx(0.0, 0.0)
                         : -std::exp(-ln_abs) * Cx(std::cos(arg), -std::sin(arg));
  return out;
}

inline Chain run_chain(Cx kappa, const ExternalAddress& s, const std::vector<double>& lad,
                       int N, bool virt, double tol_sing) {
  Chain c;
  Cx z, d;
  if (virt) {
    Seed sd = virtual_seed(kappa, s, lad, N, tol_sing);
    z = sd.z;
    d = sd.d;
    c.flags |= sd.flags;
    c.depth = N + 1;
  } else {
    z = Cx(lad[N], s.entry_two_pi(N + 1));
    d = Cx(0.0, 0.0);
    c.depth = std::max(N, 1);
  }
  c.levels.assign((std::size_t)N + 1, Cx());
  c.levels[N] = z;
  for (int k = N; k >= 1; --k) {
    Cx w = z - kappa;
    Cx lg = principal_log(w);
    branch_checks(w, lg.imag(), tol_sing, c.flags, k);
    d = (d - 1.0) / w;
    z = Cx(lg.real(), lg.imag() + s.entry_two_pi(k));
    c.levels[k - 1] = z;
  }
  c.z0 = z;
  c.d0 = d;
  return c;
}

}  // namespace detail

/// Dynamic-ray point g_s^kappa(t) by backward iteration along the
/// address-selected logarithm branches, with dg/dkappa propagated through
/// the recursion and a depth-stability residual.
inline RaySample pullback_point(Cx kappa, const ExternalAddress& s, double t,
                                const PullbackOptions& opt = {}) {
  require_finite(kappa, "kappa");
  if (!(t > 0.0)) fail(Errc::domain_error, "pullback_point requires t > 0");
  if (s.is_fast()) {
    auto pb = s.potential_bound();
    if (t < pb.estimate - 1e-12)
      fail(Errc::domain_error, "t below the potential bound t_s of the address");
  }
  const double ak = std::abs(kappa);
  int hint = std::max(opt.depth_hint, 1);
  for (;;) {
    auto lad = growth_ladder(t, opt.r_cap, (std::size_t)hint + 1);
    int m = (int)lad.size() - 1;
    int nmax = m;
    while (nmax >= 1 && !std::isfinite(s.entry_two_pi(nmax + 1))) --nmax;
    int n1 = -1;
    for (int n = nmax; n >= 1; --n) {
      double e = std::abs(s.entry_two_pi(n + 1));
      if (lad[n] >= 4.0 * (e + ak + 1.0)) {
        n1 = n;
        break;
      }
    }
    if (n1 < 0) n1 = std::max(nmax, 0);
    int n2 = std::min(n1 + 2, nmax);

    detail::Chain primary, companion;
    double residual;
    if (n2 > n1) {
      primary = detail::run_chain(kappa, s, lad, n2, true, opt.tol_sing);
      companion = detail::run_chain(kappa, s, lad, n1, true, opt.tol_sing);
      residual = std::abs(primary.z0 - companion.z0);
    } else {
      // depth-capped: the virtual level already folds in everything beyond
      // representable range; the top-up vs plain spread only signals
      // configurations that never stabilize (broken preimage pieces)
      primary = detail::run_chain(kappa, s, lad, n1, true, opt.tol_sing);
      companion = detail::run_chain(kappa, s, lad, n1, false, opt.tol_sing);
      double spread = std::abs(primary.z0 - companion.z0);
      residual =
          8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(primary.z0));
      if (spread > 1.0) primary.flags |= kFlagDepthSpread;
    }

    if (residual > opt.eps) {
      if (m == hint && hint < opt.max_depth) {
        hint = std::min(2 * hint, opt.max_depth);
        continue;
      }
      fail(Errc::no_convergence,
           "pullback residual " + std::to_string(residual) + " above tolerance");
    }

    int kstar = n2 > n1 ? n2 : n1;
    if (kstar >= 1) {
      double u = growth_F_inv_iter(std::max(primary.levels[kstar].real(), 0.0), kstar);
      if (std::abs(u - t) > opt.onray_tol) primary.flags |= kFlagPotentialMismatch;
    }

    RaySample out{s, t, primary.z0, primary.d0, primary.depth, residual, primary.flags};
    return out;
  }
}

struct RayTrace {
  enum class Truncation { complete, premature_end };

  ExternalAddress address;
  Cx kappa{};
  std::vector<RaySample> samples;  // potentials strictly decreasing
  Truncation truncation = Truncation::complete;
  double end_t = 0.0;  // premature_end: first potential that is not on the ray
  int n_failed = 0;    // samples dropped for NoConvergence
};

struct TraceOptions {
  PullbackOptions pullback{};
  double jump_base = 2.0;    // |dz| allowed between adjacent samples ...
  double jump_per_dt = 25.0; // ... plus this much per unit of dt
};

/// Discretized ray over [t_lo, t_hi], sampled at geometrically spaced
/// potentials from t_hi down. Stops with PrematureEnd at the first sample
/// that is not on the ray (singular hit, domain end, flagged point, or a
/// discontinuity between consecutive samples).
inline RayTrace trace_ray(Cx kappa, const ExternalAddress& s, double t_lo, double t_hi,
                          int n_samples, const TraceOptions& opt = {}) {
  if (!(t_lo > 0.0) || !(t_lo < t_hi)) fail(Errc::domain_error, "trace_ray needs 0 < t_lo < t_hi");
  if (n_samples < 2) fail(Errc::domain_error, "trace_ray needs n_samples >= 2");
  RayTrace tr;
  tr.address = s;
  tr.kappa = kappa;
  const double ratio = t_lo / t_hi;
  for (int i = 0; i < n_samples; ++i) {
    double t = t_hi * std::pow(ratio, (double)i / (n_samples - 1));
    if (i == n_samples - 1) t = t_lo;
    RaySample sample;
    try {
      sample = pullback_point(kappa, s, t, opt.pullback);
    } catch (const Error& e) {
      if (e.code() == Errc::no_convergence) {
        ++tr.n_failed;
        continue;
      }
      if (e.code() == Errc::domain_error || e.code() == Errc::singular_hit) {
        tr.truncation = RayTrace::Truncation::premature_end;
        tr.end_t = t;
        return tr;
      }
      throw;
    }
    if (sample.flags != 0) {
      tr.truncation = RayTrace::Truncation::premature_end;
      tr.end_t = t;
      return tr;
    }
    if (!tr.samples.empty()) {
      const RaySample& prev = tr.samples.back();
      double dt = prev.t - t;
      if (std::abs(sample.value - prev.value) > opt.jump_base + opt.jump_per_dt * dt) {
        tr.truncation = RayTrace::Truncation::premature_end;
        tr.end_t = t;
        return tr;
      }
    }
    tr.samples.push_back(std::move(sample));
  }
  return tr;
}

struct DerivativeCheck {
  Cx analytic{};
  Cx finite_diff{};      // central difference along the real direction
  Cx finite_diff_im{};   // central difference along the imaginary direction
  double rel_err = 0.0;  // worst direction vs analytic, relative
};

/// Validates the propagated dg/dkappa against central finite differences in
/// two directions (agreement of the two is the holomorphy check).
inline DerivativeCheck ray_derivative_check(Cx kappa, const ExternalAddress& s, double t,
                                            double h, const PullbackOptions& opt = {}) {
  if (!(h > 0.0)) fail(Errc::domain_error, "ray_derivative_check requires h > 0");
  DerivativeCheck out;
  out.analytic = pullback_point(kappa, s, t, opt).dvalue_dkappa;
  Cx pr = pullback_point(kappa + h, s, t, opt).value;
  Cx mr = pullback_point(kappa - h, s, t, opt).value;
  Cx pi_ = pullback_point(kappa + Cx(0, h), s, t, opt).value;
  Cx mi = pullback_point(kappa - Cx(0, h), s, t, opt).value;
  out.finite_diff = (pr - mr) / (2.0 * h);
  out.finite_diff_im = (pi_ - mi) / (Cx(0, 2.0 * h));
  double scale = std::max(1.0, std::abs(out.analytic));
  out.rel_err = std::max(std::abs(out.analytic - out.finite_diff),
                         std::abs(out.analytic - out.finite_diff_im)) /
                scale;
  return out;
}

}  // namespace expray
