#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "expray/common.hpp"
#include "expray/growth.hpp"

namespace expray {

enum class SpeedClass { slow, fast, undetermined };

struct PotentialBound {
  double estimate = 0.0;
  bool exact = false;
  double delta = 0.0;  // estimate lies in [true - delta, true] up to roundoff
};

/// External address s_1 s_2 s_3 ... in one of two finitely described families:
///
///  - eventually periodic:  s = preamble . period period period ...
///  - fast generator:       s_k = sign * floor(F^{k-1}(x) / 2pi), optionally
///    behind a finite integer prefix and with a shift count ("drop") applied
///    to the generator index so that shifts stay representable.
///
/// Values are immutable; copies share the cached generator ladder.
class ExternalAddress {
 public:
  enum class Form { periodic, fast };

  /// Defaults to the zero address 0 0 0 ...
  ExternalAddress() = default;

  static ExternalAddress periodic(std::vector<long long> preamble,
                                  std::vector<long long> period) {
    if (period.empty()) fail(Errc::parse_error, "periodic address needs a nonempty period");
    ExternalAddress a;
    a.form_ = Form::periodic;
    a.head_ = std::move(preamble);
    a.period_ = std::move(period);
    return a;
  }

  static ExternalAddress fast(double x, int sign = +1) {
    return fast_prefixed({}, x, sign, 0);
  }

  static ExternalAddress fast_prefixed(std::vector<long long> prefix, double x, int sign,
                                       int drop = 0) {
    if (!(x > 0.0) || !std::isfinite(x))
      fail(Errc::parse_error, "fast generator needs x > 0");
    if (sign != 1 && sign != -1) fail(Errc::parse_error, "fast generator sign must be +-1");
    if (drop < 0) fail(Errc::parse_error, "fast generator drop must be >= 0");
    ExternalAddress a;
    a.form_ = Form::fast;
    a.head_ = std::move(prefix);
    a.x_ = x;
    a.sign_ = sign;
    a.drop_ = drop;
    a.gen_ladder_ = std::make_shared<const std::vector<double>>(
        growth_ladder(x, 1e306, kMaxGenLadder));
    return a;
  }

  Form form() const { return form_; }
  const std::vector<long long>& head() const { return head_; }
  const std::vector<long long>& period() const { return period_; }
  double generator_x() const { return x_; }
  int generator_sign() const { return sign_; }
  int generator_drop() const { return drop_; }

  /// s_k as an exact integer. OverflowDepth where the generator entry
  /// exceeds the exactly representable range.
  long long entry(int k) const {
    require_index(k);
    if (k <= (int)head_.size()) return head_[k - 1];
    if (form_ == Form::periodic) {
      std::size_t i = (std::size_t)(k - 1 - (int)head_.size()) % period_.size();
      return period_[i];
    }
    double v = gen_value(k);
    if (!std::isfinite(v))
      fail(Errc::overflow_depth, "fast-generator entry " + std::to_string(k) + " overflows");
    double s = std::floor(v / kTwoPi);
    if (s > 9.0e18)
      fail(Errc::overflow_depth, "fast-generator entry " + std::to_string(k) + " exceeds integer range");
    return sign_ * (long long)s;
  }

  /// 2*pi*s_k as a double; +-inf when beyond double range (fast tails).
  double entry_two_pi(int k) const {
    require_index(k);
    if (k <= (int)head_.size()) return kTwoPi * (double)head_[k - 1];
    if (form_ == Form::periodic) {
      std::size_t i = (std::size_t)(k - 1 - (int)head_.size()) % period_.size();
      return kTwoPi * (double)period_[i];
    }
    double v = gen_value(k);
    if (!std::isfinite(v)) return sign_ > 0 ? std::numeric_limits<double>::infinity()
                                            : -std::numeric_limits<double>::infinity();
    return sign_ * kTwoPi * std::floor(v / kTwoPi);
  }

  /// ln|2*pi*s_k|; -inf for zero entries. For fast tails beyond double range
  /// the value is recovered from one rung lower on the generator ladder.
  double log_abs_entry_two_pi(int k) const {
    double e = entry_two_pi(k);
    if (std::isfinite(e)) {
      if (e == 0.0) return -std::numeric_limits<double>::infinity();
      return std::log(std::abs(e));
    }
    // ln(2pi*floor(F^{j-1}(x)/2pi)) = ln(F^{j-1}(x)) + O(2pi/F^{j-1})
    //                               = F^{j-2}(x) up to e^{-F^{j-2}} terms.
    int j = gen_index(k);
    const auto& lad = *gen_ladder_;
    if (j - 2 < (int)lad.size()) return lad[j - 2];
    return std::numeric_limits<double>::infinity();
  }

  int entry_sign(int k) const {
    if (k <= (int)head_.size() || form_ == Form::periodic) {
      double e = entry_two_pi(k);
      return e > 0 ? 1 : (e < 0 ? -1 : 0);
    }
    double e = entry_two_pi(k);
    if (std::isfinite(e) && e == 0.0) return 0;
    return sign_;
  }

  ExternalAddress shifted() const {
    ExternalAddress a = *this;
    if (!head_.empty()) {
      a.head_.erase(a.head_.begin());
      return a;
    }
    if (form_ == Form::periodic) {
      std::rotate(a.period_.begin(), a.period_.begin() + 1, a.period_.end());
      return a;
    }
    a.drop_ += 1;
    return a;
  }

  ExternalAddress negated() const {
    ExternalAddress a = *this;
    for (auto& v : a.head_) v = -v;
    for (auto& v : a.period_) v = -v;
    a.sign_ = -a.sign_;
    return a;
  }

  SpeedClass speed() const {
    return form_ == Form::periodic ? SpeedClass::slow : SpeedClass::fast;
  }
  bool is_fast() const { return speed() == SpeedClass::fast; }

  /// t_s = limsup_k F^{-(k-1)}(2pi|s_k|), estimated over the tail window
  /// k in [k_max/2, k_max]. Exact (and zero) for eventually periodic forms.
  PotentialBound potential_bound(int k_max = 60) const {
    if (k_max < 1) fail(Errc::domain_error, "potential_bound requires k_max >= 1");
    if (form_ == Form::periodic) return {0.0, true, 0.0};
    // Limit of the tail in inverse coordinates: the generator's own potential
    // advanced by (drop - prefix_len) applications of F.
    int net = drop_ - (int)head_.size();
    double sat = x_;
    for (int i = 0; i < std::abs(net); ++i)
      sat = net > 0 ? growth_F(sat) : growth_F_inv_iter(sat, 1);
    const auto& lad = *gen_ladder_;
    double best = 0.0;
    int lo = std::max(k_max / 2, (int)head_.size() + 1);
    for (int k = lo; k <= k_max; ++k) {
      int j = gen_index(k);
      double u;
      if (j - 1 < (int)lad.size()) {
        double w = kTwoPi * std::floor(lad[j - 1] / kTwoPi);
        u = growth_F_inv_iter(w, k - 1);
      } else {
        u = sat;  // floor drop is invisible at this depth
      }
      best = std::max(best, u);
    }
    double delta = std::max(sat - best, 0.0) + 1e-12;
    return {best, false, delta};
  }

  std::string str() const {
    std::string out;
    if (form_ == Form::periodic) {
      out = "p:";
      out += join(head_);
      out += '|';
      out += join(period_);
      return out;
    }
    out = "f:";
    if (!head_.empty()) {
      out += join(head_);
      out += '|';
    }
    if (sign_ < 0) out += '-';
    out += format_x(x_);
    if (drop_ > 0) out += "@" + std::to_string(drop_);
    return out;
  }

  /// Literal grammar:
  ///   "p:<ints>|<ints>"       eventually periodic (preamble may be empty,
  ///                           period must not be)
  ///   "f:[<ints>|]<real>[@n]" fast generator; the sign of the real is the
  ///                           generator sign, optional prefix and shift count
  static ExternalAddress parse(std::string_view lit) {
    if (lit.size() < 2 || lit[1] != ':')
      fail(Errc::parse_error, "address literal must start with 'p:' or 'f:'");
    char kind = lit[0];
    std::string_view body = lit.substr(2);
    if (kind == 'p') {
      auto bar = body.find('|');
      if (bar == std::string_view::npos)
        fail(Errc::parse_error, "periodic literal needs '|'");
      auto pre = parse_ints(body.substr(0, bar));
      auto per = parse_ints(body.substr(bar + 1));
      if (per.empty()) fail(Errc::parse_error, "periodic literal needs a nonempty period");
      return periodic(std::move(pre), std::move(per));
    }
    if (kind != 'f') fail(Errc::parse_error, "unknown address form");
    std::vector<long long> prefix;
    auto bar = body.find('|');
    if (bar != std::string_view::npos) {
      prefix = parse_ints(body.substr(0, bar));
      body = body.substr(bar + 1);
    }
    int drop = 0;
    auto at = body.find('@');
    if (at != std::string_view::npos) {
      auto ds = body.substr(at + 1);
      auto [p, ec] = std::from_chars(ds.data(), ds.data() + ds.size(), drop);
      if (ec != std::errc() || p != ds.data() + ds.size() || drop < 0)
        fail(Errc::parse_error, "bad drop count in fast literal");
      body = body.substr(0, at);
    }
    int sign = +1;
    if (!body.empty() && (body[0] == '-' || body[0] == '+')) {
      if (body[0] == '-') sign = -1;
      body = body.substr(1);
    }
    double x = 0.0;
    auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), x);
    if (ec != std::errc() || p != body.data() + body.size())
      fail(Errc::parse_error, "bad generator value in fast literal");
    return fast_prefixed(std::move(prefix), x, sign, drop);
  }

  friend bool operator==(const ExternalAddress& a, const ExternalAddress& b) {
    if (a.form_ != b.form_ || a.head_ != b.head_) return false;
    if (a.form_ == Form::periodic) return a.period_ == b.period_;
    return a.x_ == b.x_ && a.sign_ == b.sign_ && a.drop_ == b.drop_;
  }

 private:
  static constexpr std::size_t kMaxGenLadder = 4096;

  static void require_index(int k) {
    if (k < 1) fail(Errc::domain_error, "address entries are indexed from 1");
  }

  int gen_index(int k) const { return k - (int)head_.size() + drop_; }

  double gen_value(int k) const {
    int j = gen_index(k);
    const auto& lad = *gen_ladder_;
    if (j - 1 < (int)lad.size()) return lad[j - 1];
    if (lad.size() == kMaxGenLadder)
      fail(Errc::overflow_depth, "fast-generator ladder cap reached");
    return std::numeric_limits<double>::infinity();
  }

  static std::vector<long long> parse_ints(std::string_view sv) {
    std::vector<long long> out;
    if (sv.empty()) return out;
    std::size_t pos = 0;
    while (pos <= sv.size()) {
      auto comma = sv.find(',', pos);
      auto tok = sv.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                : comma - pos);
      long long v = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || p != tok.data() + tok.size())
        fail(Errc::parse_error, "bad integer '" + std::string(tok) + "' in address literal");
      out.push_back(v);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    return out;
  }

  static std::string join(const std::vector<long long>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(v[i]);
    }
    return out;
  }

  static std::string format_x(double x) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    std::string s(buf, p);
    // keep a decimal marker so the literal is visibly a real
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos) s += ".0";
    return s;
  }

  Form form_ = Form::periodic;
  std::vector<long long> head_;       // preamble (periodic) or prefix (fast)
  std::vector<long long> period_{0};  // periodic only
  double x_ = 0.0;
  int sign_ = 1;
  int drop_ = 0;
  std::shared_ptr<const std::vector<double>> gen_ladder_;
};

inline SpeedClass classify_speed(const ExternalAddress& s) { return s.speed(); }

inline PotentialBound potential_bound(const ExternalAddress& s, int k_max = 60) {
  return s.potential_bound(k_max);
}

}  // namespace expray
