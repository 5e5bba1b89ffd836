#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "expray/address.hpp"
#include "expray/common.hpp"
#include "expray/dyn_rays.hpp"
#include "expray/dynamics.hpp"

namespace expray {

struct ParamRaySample {
  ExternalAddress address;
  double t = 0.0;
  Cx kappa{};
  Cx dg_dkappa{};          // pullback derivative at the solution
  int depth = 0;           // pullback depth at the solution
  double residual = 0.0;   // |g_s^kappa(t) - kappa|
  int newton_iters = 0;
  int continuation_steps = 0;
};

struct SolveOptions {
  double eps = 1e-10;
  double t_seed = 20.0;    // direct Newton from the asymptote above this
  double step0 = 1.0;
  double step_min = 1e-6;
  int newton_max = 40;
  double kappa_bound = 1e8;
  PullbackOptions pullback{};
};

namespace detail {

inline std::optional<ParamRaySample> newton_once(const ExternalAddress& s, double t, Cx seed,
                                                 const SolveOptions& opt) {
  Cx k = seed;
  for (int it = 0; it <= opt.newton_max; ++it) {
    RaySample sm;
    try {
      sm = pullback_point(k, s, t, opt.pullback);
    } catch (const Error&) {
      return std::nullopt;
    }
    Cx h = sm.value - k;
    if (std::abs(h) <= opt.eps) {
      ParamRaySample out;
      out.address = s;
      out.t = t;
      out.kappa = k;
      out.dg_dkappa = sm.dvalue_dkappa;
      out.depth = sm.depth;
      out.residual = std::abs(h);
      out.newton_iters = it;
      return out;
    }
    Cx hp = sm.dvalue_dkappa - 1.0;
    if (std::abs(hp) < 1e-14) return std::nullopt;
    k -= h / hp;
    if (!is_finite(k) || std::abs(k) > opt.kappa_bound) return std::nullopt;
  }
  return std::nullopt;
}

/// Continuation from the asymptote seed at max(t_seed, t_target) down to
/// t_target, reusing the previous kappa as the Newton seed. Adaptive steps:
/// halve on failure, re-double after three one-shot successes.
inline ParamRaySample continue_down(const ExternalAddress& s, double t_target,
                                    const SolveOptions& opt) {
  double t0 = std::max(opt.t_seed, t_target);
  Cx seed = Cx(t0, s.entry_two_pi(1));
  auto cur = newton_once(s, t0, seed, opt);
  if (!cur)
    fail(Errc::continuation_stuck, "parameter solve failed at the asymptote seed t=" +
                                       std::to_string(t0));
  int steps = 0;
  double tc = t0;
  double dt = opt.step0;
  int streak = 0;
  while (tc > t_target) {
    double tn = std::max(t_target, tc - dt);
    auto nxt = newton_once(s, tn, cur->kappa, opt);
    ++steps;
    if (!nxt) {
      dt /= 2.0;
      streak = 0;
      if (dt < opt.step_min)
        fail(Errc::continuation_stuck,
             "continuation step underflow near t=" + std::to_string(tc) +
                 " (last good t=" + std::to_string(tc) + ")");
      continue;
    }
    cur = nxt;
    tc = tn;
    if (++streak >= 3) {
      dt = std::min(dt * 2.0, opt.step0);
      streak = 0;
    }
  }
  cur->continuation_steps = steps;
  return *cur;
}

}  // namespace detail

/// The unique parameter kappa = G_s(t) with g_s^kappa(t) = kappa, found by
/// Newton on h(kappa) = g_s^kappa(t) - kappa with h' = dg/dkappa - 1.
inline ParamRaySample solve_parameter(const ExternalAddress& s, double t,
                                      const SolveOptions& opt = {}) {
  if (!(t > 0.0)) fail(Errc::domain_error, "solve_parameter requires t > 0");
  if (s.is_fast()) {
    auto pb = s.potential_bound();
    if (t < pb.estimate - 1e-12) fail(Errc::domain_error, "t below t_s for this address");
  }
  return detail::continue_down(s, t, opt);
}

/// One-shot Newton from a caller-supplied seed (no continuation). Used for
/// local uniqueness checks around endpoints.
inline ParamRaySample solve_parameter_from(const ExternalAddress& s, double t, Cx seed,
                                           const SolveOptions& opt = {}) {
  auto r = detail::newton_once(s, t, seed, opt);
  if (!r) fail(Errc::no_convergence, "Newton did not converge from the given seed");
  return *r;
}

struct ParamTraceOptions {
  SolveOptions solve{};
  double jump_base = 2.0;
  double jump_per_dt = 25.0;
  int refine_max = 4;
};

/// Parameter ray sampled at geometrically spaced potentials, descending.
/// One continuation walk feeds all samples; continuity between consecutive
/// output samples is verified (with midpoint refinement) before returning.
inline std::vector<ParamRaySample> trace_parameter_ray(const ExternalAddress& s, double t_lo,
                                                       double t_hi, int n_samples,
                                                       const ParamTraceOptions& opt = {}) {
  if (!(t_lo > 0.0) || !(t_lo < t_hi))
    fail(Errc::domain_error, "trace_parameter_ray needs 0 < t_lo < t_hi");
  if (n_samples < 2) fail(Errc::domain_error, "trace_parameter_ray needs n_samples >= 2");
  std::vector<double> grid(n_samples);
  const double ratio = t_lo / t_hi;
  for (int i = 0; i < n_samples; ++i)
    grid[i] = t_hi * std::pow(ratio, (double)i / (n_samples - 1));
  grid.back() = t_lo;

  std::vector<ParamRaySample> out;
  out.reserve(n_samples);
  // walk once from the asymptote; solve every grid point on the way down
  SolveOptions so = opt.solve;
  double t0 = std::max(so.t_seed, t_hi);
  auto cur = detail::newton_once(s, t0, Cx(t0, s.entry_two_pi(1)), so);
  if (!cur) fail(Errc::continuation_stuck, "parameter trace failed at the asymptote seed");
  double tc = t0;
  double dt = so.step0;
  int streak = 0, steps = 0;
  for (double tg : grid) {
    while (tc > tg) {
      double tn = std::max(tg, tc - dt);
      auto nxt = detail::newton_once(s, tn, cur->kappa, so);
      ++steps;
      if (!nxt) {
        dt /= 2.0;
        streak = 0;
        if (dt < so.step_min)
          fail(Errc::continuation_stuck, "continuation step underflow near t=" + std::to_string(tc));
        continue;
      }
      cur = nxt;
      tc = tn;
      if (++streak >= 3) {
        dt = std::min(dt * 2.0, so.step0);
        streak = 0;
      }
    }
    ParamRaySample sample = *cur;
    sample.continuation_steps = steps;
    if (!out.empty()) {
      const auto& prev = out.back();
      double gap = std::abs(sample.kappa - prev.kappa);
      double allow = opt.jump_base + opt.jump_per_dt * (prev.t - sample.t);
      if (gap > allow) {
        // verify continuity through midpoints before giving up
        bool ok = false;
        double a = prev.t, b = sample.t;
        Cx ka = prev.kappa;
        for (int r = 0; r < opt.refine_max && !ok; ++r) {
          double mid = 0.5 * (a + b);
          auto ms = detail::newton_once(s, mid, ka, so);
          if (!ms) break;
          if (std::abs(ms->kappa - ka) + std::abs(sample.kappa - ms->kappa) <= 1.25 * allow)
            ok = true;
          a = mid;
          ka = ms->kappa;
        }
        if (!ok)
          fail(Errc::continuation_stuck,
               "parameter ray discontinuity between t=" + std::to_string(prev.t) + " and t=" +
                   std::to_string(sample.t));
      }
    }
    out.push_back(std::move(sample));
  }
  return out;
}

/// Landing parameter of a fast-address ray: continuation down to the
/// potential bound t_s and a final solve there; the landed parameter is
/// verified to be escaping.
inline ParamRaySample land_endpoint(const ExternalAddress& s, const SolveOptions& opt = {}) {
  if (!s.is_fast()) fail(Errc::not_fast_address, "land_endpoint needs a fast address");
  auto pb = s.potential_bound();
  ParamRaySample sample = detail::continue_down(s, pb.estimate, opt);
  auto orbit = escape_orbit(sample.kappa, sample.kappa);
  if (orbit.verdict != OrbitRecord::Verdict::escaping)
    fail(Errc::no_convergence, "landed parameter failed the escape verification");
  return sample;
}

struct ClassificationResult {
  std::vector<long long> address_prefix;
  double t = 0.0;
  Cx verified_kappa{};
  double roundtrip_error = 0.0;
  ExternalAddress extended;  // eventually periodic extension used to verify
};

struct ClassifyOptions {
  EscapeParams escape{};
  SolveOptions solve{};
  double eps = 1e-8;
  int prefix_len = 20;
};

namespace detail {

/// Shortest period consistent with the observed tail; a hypothesis needs
/// the period visible twice (q + 2p <= length) to count as evidence, with a
/// single-sight fallback. Returns (preamble_len, period_len).
inline std::pair<int, int> infer_period(const std::vector<long long>& e) {
  int L = (int)e.size();
  auto consistent = [&](int q, int p) {
    for (int i = q; i + p < L; ++i)
      if (e[i] != e[i + p]) return false;
    return true;
  };
  for (int need = 2; need >= 1; --need)
    for (int p = 1; p <= L - 1; ++p)
      for (int q = 0; q + need * p <= L; ++q)
        if (consistent(q, p)) return {q, p};
  return {L - 1, 1};
}

}  // namespace detail

/// Classification of an escaping parameter per the ray structure: extract
/// the observed address prefix and the potential from the singular orbit,
/// extend the prefix by eventual periodicity, and verify by re-solving.
inline ClassificationResult classify_parameter(Cx kappa, const ClassifyOptions& opt = {}) {
  require_finite(kappa, "kappa");
  OrbitRecord rec = escape_orbit(kappa, kappa, opt.escape);
  if (rec.verdict != OrbitRecord::Verdict::escaping)
    fail(Errc::not_escaping, "singular orbit did not escape within budget");

  // entries are only trustworthy while the forward error amplification
  // (one factor e^{Re z} per step) has not reached the strip scale
  std::vector<long long> ents;
  double cum = std::log(2.2e-16 * (std::abs(kappa) + 1.0));
  for (int k = 1; k - 1 < (int)rec.points.size(); ++k) {
    if (k >= 2) cum += std::max(rec.points[k - 2].real(), 0.0);
    if (cum > std::log(0.25)) break;
    double im = rec.points[k - 1].imag();
    if (kPi - std::abs(std::remainder(im, kTwoPi)) < 1e-6) break;
    ents.push_back((long long)std::nearbyint(im / kTwoPi));
  }
  if (ents.empty()) fail(Errc::roundtrip_failure, "no trustworthy address entries observed");

  auto [q, p] = detail::infer_period(ents);
  std::vector<long long> pre(ents.begin(), ents.begin() + q);
  std::vector<long long> per(ents.begin() + q, ents.begin() + q + p);
  ExternalAddress ext = ExternalAddress::periodic(std::move(pre), std::move(per));

  double t_obs = orbit_potential(rec, kappa);

  ClassificationResult out;
  out.extended = ext;
  out.t = t_obs;
  try {
    ParamRaySample solved = solve_parameter(ext, t_obs, opt.solve);
    out.verified_kappa = solved.kappa;
    out.roundtrip_error = std::abs(solved.kappa - kappa);
  } catch (const Error& e) {
    fail(Errc::roundtrip_failure,
         std::string("verification solve failed: ") + e.what());
  }
  if (out.roundtrip_error > opt.eps)
    fail(Errc::roundtrip_failure,
         "roundtrip error " + std::to_string(out.roundtrip_error) + " above tolerance");

  int want = std::max((int)ents.size(), opt.prefix_len);
  out.address_prefix.reserve(want);
  for (int k = 1; k <= want; ++k) out.address_prefix.push_back(ext.entry(k));
  return out;
}

}  // namespace expray
