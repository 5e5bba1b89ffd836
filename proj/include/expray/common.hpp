#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace expray {

using Cx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Growth iterates are capped here instead of running into the double range;
// everything downstream treats values above the cap as "overflowed depth".
inline constexpr double kRCap = 1e100;

// exp() overflows a double just above 709; stay clear of it.
inline constexpr double kReGuard = 700.0;

enum class Errc {
  overflow_depth,
  boundary_strip,
  singular_hit,
  no_convergence,
  domain_error,
  continuation_stuck,
  not_fast_address,
  not_escaping,
  roundtrip_failure,
  parse_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::overflow_depth: return "OverflowDepth";
    case Errc::boundary_strip: return "BoundaryStrip";
    case Errc::singular_hit: return "SingularHit";
    case Errc::no_convergence: return "NoConvergence";
    case Errc::domain_error: return "DomainError";
    case Errc::continuation_stuck: return "ContinuationStuck";
    case Errc::not_fast_address: return "NotFastAddress";
    case Errc::not_escaping: return "NotEscaping";
    case Errc::roundtrip_failure: return "RoundtripFailure";
    case Errc::parse_error: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline bool is_finite(Cx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

inline Cx require_finite(Cx z, const char* what) {
  if (!is_finite(z)) fail(Errc::domain_error, std::string(what) + " must have finite components");
  return z;
}

}  // namespace expray
