#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "expray/dyn_rays.hpp"
#include "expray/dynamics.hpp"
#include "expray/param_rays.hpp"

namespace expray {

using json = nlohmann::json;

/// Fixed-width round-trippable formatting shared by all CSV writers.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Schema: "t,re,im,d_re,d_im,depth,residual", potentials descending.
inline std::string ray_trace_csv(const RayTrace& tr) {
  std::string out = "t,re,im,d_re,d_im,depth,residual\n";
  for (const auto& s : tr.samples) {
    out += format_double(s.t) + ',' + format_double(s.value.real()) + ',' +
           format_double(s.value.imag()) + ',' + format_double(s.dvalue_dkappa.real()) + ',' +
           format_double(s.dvalue_dkappa.imag()) + ',' + std::to_string(s.depth) + ',' +
           format_double(s.residual) + '\n';
  }
  return out;
}

inline json ray_trace_sidecar(const RayTrace& tr) {
  json j;
  j["address"] = tr.address.str();
  j["kappa"] = {tr.kappa.real(), tr.kappa.imag()};
  if (tr.truncation == RayTrace::Truncation::complete) {
    j["truncation"] = {{"kind", "complete"}};
  } else {
    j["truncation"] = {{"kind", "premature_end"}, {"at_t", tr.end_t}};
  }
  j["samples"] = tr.samples.size();
  j["failed_samples"] = tr.n_failed;
  return j;
}

/// Same schema as ray traces plus "newton_iters".
inline std::string param_ray_csv(const std::vector<ParamRaySample>& samples) {
  std::string out = "t,re,im,d_re,d_im,depth,residual,newton_iters\n";
  for (const auto& s : samples) {
    out += format_double(s.t) + ',' + format_double(s.kappa.real()) + ',' +
           format_double(s.kappa.imag()) + ',' + format_double(s.dg_dkappa.real()) + ',' +
           format_double(s.dg_dkappa.imag()) + ',' + std::to_string(s.depth) + ',' +
           format_double(s.residual) + ',' + std::to_string(s.newton_iters) + '\n';
  }
  return out;
}

inline json param_ray_sidecar(const ExternalAddress& s,
                              const std::vector<ParamRaySample>& samples) {
  json j;
  j["address"] = s.str();
  auto pb = s.potential_bound();
  j["t_s_estimate"] = pb.estimate;
  j["t_s_exact"] = pb.exact;
  j["seed"] = {{"t", 0.0}, {"kappa", {0.0, 0.0}}};
  if (!samples.empty()) {
    double t0 = samples.front().t;
    j["seed"] = {{"t", t0}, {"kappa", {t0, s.entry_two_pi(1)}}};
    j["continuation_steps"] = samples.back().continuation_steps;
  }
  j["samples"] = samples.size();
  return j;
}

inline json orbit_json(const OrbitRecord& rec) {
  json j;
  j["kappa"] = {rec.kappa.real(), rec.kappa.imag()};
  json pts = json::array();
  for (const auto& z : rec.points) pts.push_back({z.real(), z.imag()});
  j["points"] = std::move(pts);
  switch (rec.verdict) {
    case OrbitRecord::Verdict::escaping:
      j["verdict"] = {{"kind", "escaping"}, {"detected_at", rec.detected_at}};
      break;
    case OrbitRecord::Verdict::bounded:
      j["verdict"] = {{"kind", "bounded"}, {"budget", rec.budget_used}};
      break;
    case OrbitRecord::Verdict::indeterminate:
      j["verdict"] = {{"kind", "indeterminate"}};
      break;
  }
  return j;
}

inline json classification_json(const ClassificationResult& r) {
  json j;
  j["address_prefix"] = r.address_prefix;
  j["extended_address"] = r.extended.str();
  j["t"] = r.t;
  j["verified_kappa"] = {r.verified_kappa.real(), r.verified_kappa.imag()};
  j["roundtrip_error"] = r.roundtrip_error;
  return j;
}

}  // namespace expray
