#pragma once
// Noise specification, admissibility windows in exact rational arithmetic,
// covariance validation, and per-step increment sampling.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "dampspde/errors.hpp"
#include "dampspde/rng.hpp"
#include "dampspde/spectral_domain.hpp"

namespace dampspde {

using Rational = boost::rational<long long>;

inline std::string to_string(const Rational& r) {
  std::ostringstream os;
  os << r.numerator();
  if (r.denominator() != 1) os << '/' << r.denominator();
  return os.str();
}

inline double to_double(const Rational& r) { return boost::rational_cast<double>(r); }

/// Parses "p/q", a decimal literal such as "1.25" or "6e-1", or an integer.
inline Rational parse_rational(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw ConfigError("empty rational literal");
  try {
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
      const long long p = std::stoll(s.substr(0, slash)), q = std::stoll(s.substr(slash + 1));
      if (q == 0) throw ConfigError("zero denominator in '" + text + "'");
      return Rational(p, q);
    }
    long long exp10 = 0;
    auto epos = s.find_first_of("eE");
    if (epos != std::string::npos) {
      exp10 = std::stoll(s.substr(epos + 1));
      s = s.substr(0, epos);
    }
    bool neg = false;
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
      neg = s[0] == '-';
      s = s.substr(1);
    }
    const auto dot = s.find('.');
    std::string digits = s;
    if (dot != std::string::npos) {
      digits = s.substr(0, dot) + s.substr(dot + 1);
      exp10 -= static_cast<long long>(s.size() - dot - 1);
    }
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("malformed rational literal '" + text + "'");
    while (digits.size() > 1 && digits[0] == '0') digits.erase(0, 1);
    if (digits.size() > 17) throw ConfigError("rational literal too long: '" + text + "'");
    long long num = std::stoll(digits);
    long long den = 1;
    for (; exp10 > 0; --exp10) num *= 10;
    for (; exp10 < 0; ++exp10) den *= 10;
    return Rational(neg ? -num : num, den);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("malformed rational literal '" + text + "'");
  }
}

/// Exact rational for the shortest decimal representation of x.
inline Rational rational_from_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return parse_rational(std::string(buf, res.ptr));
}

/// Interval (lo, hi) with optional closed left end and optional infinite right end.
struct Window {
  Rational lo{0};
  Rational hi{0};
  bool lo_closed = false;
  bool hi_infinite = false;

  bool empty() const { return !hi_infinite && (lo_closed ? lo >= hi : lo >= hi); }
  bool contains(const Rational& x) const {
    const bool left = lo_closed ? x >= lo : x > lo;
    return left && (hi_infinite || x < hi);
  }
  Rational midpoint() const { return hi_infinite ? lo + 1 : (lo + hi) / 2; }
  std::string str() const {
    return std::string(lo_closed ? "[" : "(") + to_string(lo) + ", " + (hi_infinite ? "inf" : to_string(hi)) + ")";
  }
  bool operator==(const Window&) const = default;
};

inline Window open_window(Rational lo, Rational hi) { return {lo, hi, false, false}; }

// ---------------------------------------------------------------------------
// Noise specification

enum class DistributedKind { compact, white1d, lr_valued };

inline const char* to_string(DistributedKind k) {
  switch (k) {
    case DistributedKind::compact: return "compact";
    case DistributedKind::white1d: return "white";
    case DistributedKind::lr_valued: return "lr";
  }
  return "?";
}

struct PointChannel {
  std::vector<double> s0;
  bool operator==(const PointChannel&) const = default;
};

struct DistributedChannel {
  DistributedKind kind = DistributedKind::compact;
  std::vector<double> lambdas;  // eigenvalues lambda_n >= 0 on the retained basis
  std::vector<int> basis;       // positions in the truncation's mode list (0-based)
  Rational r{0};                // L^r exponent for lr_valued
  bool operator==(const DistributedChannel&) const = default;
};

struct NoiseSpec {
  std::optional<PointChannel> point;
  std::optional<DistributedChannel> distributed;
  bool operator==(const NoiseSpec&) const = default;
};

/// Resolves the distributed channel against a truncation: one lambda per
/// retained mode (zero where the basis does not reach).
inline std::vector<double> mode_lambdas(const DistributedChannel& ch, const SpectralTruncation& t) {
  std::vector<double> out(t.size(), 0.0);
  if (ch.kind == DistributedKind::white1d) {
    std::fill(out.begin(), out.end(), 1.0);
    return out;
  }
  for (std::size_t i = 0; i < ch.lambdas.size(); ++i) {
    const int pos = i < ch.basis.size() ? ch.basis[i] : static_cast<int>(i);
    if (pos < 0) throw ConfigError("covariance basis positions must be >= 0");
    if (ch.lambdas[i] < 0.0) throw ConfigError("covariance eigenvalues must be nonnegative");
    if (static_cast<std::size_t>(pos) < out.size()) out[pos] = ch.lambdas[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Admissibility

struct AdmissibilityReport {
  EquationKind kind = EquationKind::plate;
  int d = 1;
  Rational q{2};
  Rational q_dual{2};
  Window q_window;
  bool q_ok = false;

  bool has_point = false;
  bool has_distributed = false;
  Window theta_C;  // (H5)
  Window theta_G;  // (H3), equal to theta_C for point evaluation
  Window theta_B;  // (H4)
  std::string theta_B_rule;
  std::string theta_B_wide;  // (d/r, 1) for the wave case; not used, the run needs theta_B < 1/2

  Rational a{0};
  Rational tau{2};
  Rational chosen_theta_B{0}, chosen_theta_C{0}, chosen_theta_G{0};

  bool h3 = true, h4 = true, h5 = true;
  bool exponent_conditions = false;
  bool verdict = false;
  std::vector<std::string> violations;

  /// min{1 - theta_G, 1/2 - theta_B, 1/2 - theta_C}: bound on lambda + delta.
  Rational regularity_bound() const {
    Rational b = Rational(1, 2) - chosen_theta_B;
    b = std::min(b, Rational(1, 2) - chosen_theta_C);
    if (has_point) b = std::min(b, Rational(1) - chosen_theta_G);
    return b;
  }
};

struct ThetaOverrides {
  std::optional<Rational> theta_B, theta_C;
  bool operator==(const ThetaOverrides&) const = default;
};

inline AdmissibilityReport check_admissibility(EquationKind kind, int d, const Rational& q, const NoiseSpec& noise,
                                               const ThetaOverrides& overrides = {}) {
  if (d < 1) throw ConfigError("dimension must be >= 1");
  if (q <= 1) throw ConfigError("integrability exponent q must exceed 1");
  AdmissibilityReport r;
  r.kind = kind;
  r.d = d;
  r.q = q;
  r.q_dual = q / (q - 1);
  r.tau = std::min(q, Rational(2));
  const Rational half(1, 2);

  if (kind == EquationKind::plate) {
    r.q_window = d == 1 ? Window{Rational(1), Rational(0), false, true} : open_window(1, Rational(d, d - 1));
  } else {
    r.q_window = open_window(1, Rational(2 * d, 2 * d - 1));
  }
  r.q_ok = r.q_window.contains(q);
  if (!r.q_ok) {
    r.violations.push_back(kind == EquationKind::plate ? "q >= d/(d-1): q must lie in " + r.q_window.str()
                                                       : "q >= 2d/(2d-1): q must lie in " + r.q_window.str());
  }

  r.has_point = noise.point.has_value();
  r.has_distributed = noise.distributed.has_value();

  if (r.has_point) {
    // Point evaluation lies in X_{-theta} once the second slot E_{-theta/2}
    // contains delta: 2 theta > d/q' (plate, fourth order) or theta > d/q'
    // (wave, second order).
    const Rational lo = kind == EquationKind::plate ? Rational(d) / (2 * r.q_dual) : Rational(d) / r.q_dual;
    r.theta_C = open_window(lo, half);
    r.theta_G = r.theta_C;
    r.h5 = r.h3 = !r.theta_C.empty();
    if (r.theta_C.empty()) r.violations.push_back("theta_C window " + r.theta_C.str() + " is empty");
    r.chosen_theta_C = overrides.theta_C.value_or(r.theta_C.midpoint());
    if (overrides.theta_C && !r.theta_C.contains(*overrides.theta_C)) {
      r.h5 = false;
      r.violations.push_back("theta_C = " + to_string(*overrides.theta_C) + " outside " + r.theta_C.str());
    }
    r.chosen_theta_G = r.chosen_theta_C;
  }

  if (r.has_distributed) {
    const auto& ch = *noise.distributed;
    switch (ch.kind) {
      case DistributedKind::compact:
        r.theta_B = {Rational(0), half, true, false};
        r.theta_B_rule = "sum lambda_n ||e_n||_inf^2 < inf: theta_B = 0 admissible";
        break;
      case DistributedKind::white1d:
        if (d != 1) {
          r.h4 = false;
          r.violations.push_back("white noise requires d = 1");
        }
        if (kind == EquationKind::plate && q <= 2) {
          r.h4 = false;
          r.violations.push_back("white noise requires q > 2");
        }
        if (kind == EquationKind::wave) {
          r.h4 = false;
          r.violations.push_back("white noise is not covered for the wave equation (q < 2 forced)");
        }
        r.theta_B = open_window(Rational(1, 4) + Rational(1) / (2 * q), half);
        r.theta_B_rule = "theta_B in (1/4 + 1/(2q), 1/2)";
        break;
      case DistributedKind::lr_valued:
        if (kind == EquationKind::plate) {
          if (ch.r <= d) {
            r.h4 = false;
            r.violations.push_back("L^r-valued noise requires r > d");
          }
          r.theta_B = open_window(Rational(d) / (2 * ch.r), half);
          r.theta_B_rule = "theta_B in (d/(2r), 1/2)";
        } else {
          if (ch.r <= 2 * d) {
            r.h4 = false;
            r.violations.push_back("L^r-valued noise requires r > 2d");
          }
          r.theta_B = open_window(Rational(d) / ch.r, half);
          r.theta_B_rule = "theta_B in (d/r, 1/2)";
          r.theta_B_wide = "(" + to_string(Rational(d) / ch.r) + ", 1)";
        }
        break;
    }
    if (r.theta_B.empty()) {
      r.h4 = false;
      r.violations.push_back("theta_B window " + r.theta_B.str() + " is empty");
    }
    r.chosen_theta_B = overrides.theta_B.value_or(ch.kind == DistributedKind::compact ? Rational(0)
                                                                                     : r.theta_B.midpoint());
    if (overrides.theta_B && !r.theta_B.contains(*overrides.theta_B)) {
      r.h4 = false;
      r.violations.push_back("theta_B = " + to_string(*overrides.theta_B) + " outside " + r.theta_B.str());
    }
  }

  // a + max(theta_B, theta_C) < 1/2 and 0 <= a + theta_G < 3/2 - 1/tau.
  const Rational mx = std::max(r.chosen_theta_B, r.chosen_theta_C);
  bool ok = r.a + mx < half;
  if (!ok) r.violations.push_back("a + max(theta_B, theta_C) >= 1/2");
  if (r.has_point) {
    const bool g = r.a + r.chosen_theta_G < Rational(3, 2) - Rational(1) / r.tau;
    if (!g) r.violations.push_back("a + theta_G >= 3/2 - 1/tau");
    ok = ok && g;
  }
  r.exponent_conditions = ok;
  r.verdict = r.q_ok && r.h3 && r.h4 && r.h5 && ok;
  return r;
}

// ---------------------------------------------------------------------------
// Covariance validation

struct CovarianceReport {
  double sup_square_function = 0.0;  // grid sup of (sum lambda_n e_n^2)^{1/2}
  double lr_square_function = 0.0;   // its L^r norm when r is finite
  std::vector<int> dyadic_n;
  std::vector<double> partial_sums;  // sum_{n<=N} lambda_n ||e_n||_inf^2
  double tail_ratio = 0.0;           // last dyadic tail over the previous one
  bool summable = false;
};

inline CovarianceReport validate_covariance(const NoiseSpec& noise, const SpectralTruncation& t, const SineGrid& grid) {
  CovarianceReport rep;
  if (!noise.distributed) {
    rep.summable = true;
    return rep;
  }
  const auto lam = mode_lambdas(*noise.distributed, t);
  double sup_e2 = 1.0;
  for (double l : t.domain.lengths) sup_e2 *= 2.0 / l;
  Eigen::VectorXd s2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < t.size(); ++k)
    if (lam[k] > 0.0) s2 += lam[k] * grid.basis().col(static_cast<Eigen::Index>(k)).cwiseAbs2();
  const Eigen::VectorXd s = s2.cwiseSqrt();
  rep.sup_square_function = s.size() ? s.maxCoeff() : 0.0;
  if (noise.distributed->kind == DistributedKind::lr_valued)
    rep.lr_square_function = grid.lq_norm(s, to_double(noise.distributed->r));

  double acc = 0.0;
  int next = 1;
  for (std::size_t k = 0; k < t.size(); ++k) {
    acc += lam[k] * sup_e2;
    if (static_cast<int>(k + 1) == next) {
      rep.dyadic_n.push_back(next);
      rep.partial_sums.push_back(acc);
      next *= 2;
    }
  }
  const auto n = rep.partial_sums.size();
  if (n >= 3) {
    const double t1 = rep.partial_sums[n - 1] - rep.partial_sums[n - 2];
    const double t0 = rep.partial_sums[n - 2] - rep.partial_sums[n - 3];
    rep.tail_ratio = t0 > 0.0 ? t1 / t0 : (t1 > 0.0 ? INFINITY : 0.0);
    rep.summable = rep.tail_ratio < 0.75;
  } else {
    rep.summable = true;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Increments

/// Brownian increment over one step together with its time integral
/// dI = int_{t_j}^{t_j+dt} (w(s) - w(t_j)) ds; jointly Gaussian with
/// Var dw = dt, Cov = dt^2/2, Var dI = dt^3/3.
struct BrownianStep {
  double dw = 0.0;
  double dI = 0.0;
};

inline BrownianStep brownian_step(const CounterRng& rng, std::uint64_t step, double dt, double scale = 1.0) {
  const auto z = rng.normal_pair(step);
  const double sq = std::sqrt(dt);
  return {scale * sq * z[0], scale * dt * sq * (0.5 * z[0] + z[1] / (2.0 * std::sqrt(3.0)))};
}

/// Per-path increment source. Increments are addressed by step index, so the
/// stream is identical whether drawn in one pass or in several batches.
class IncrementSampler {
 public:
  IncrementSampler(const NoiseSpec& noise, const SpectralTruncation& t, double dt, std::uint64_t seed,
                   std::uint64_t path)
      : dt_(dt), point_(seed, derive_stream(path, Channel::point)) {
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    has_point_ = noise.point.has_value();
    if (noise.distributed) {
      lambdas_ = mode_lambdas(*noise.distributed, t);
      for (std::size_t k = 0; k < t.size(); ++k)
        streams_.emplace_back(seed, derive_stream(path, Channel::distributed, mode_key(t.modes[k].index)));
    }
  }

  BrownianStep point(std::uint64_t step) const {
    return has_point_ ? brownian_step(point_, step, dt_) : BrownianStep{};
  }

  /// Coefficient increment d beta_k ~ N(0, lambda_k dt) with its time integral.
  BrownianStep distributed(std::size_t k, std::uint64_t step) const {
    if (streams_.empty() || lambdas_[k] == 0.0) return {};
    return brownian_step(streams_[k], step, dt_, std::sqrt(lambdas_[k]));
  }

  bool has_point() const { return has_point_; }
  bool has_distributed() const { return !streams_.empty(); }
  const std::vector<double>& lambdas() const { return lambdas_; }
  double dt() const { return dt_; }

  static std::uint64_t mode_key(const std::vector<int>& index) {
    std::uint64_t h = 0x1234567ull;
    for (int n : index) h = splitmix64(h ^ static_cast<std::uint64_t>(n));
    return h;
  }

 private:
  double dt_;
  bool has_point_ = false;
  CounterRng point_;
  std::vector<double> lambdas_;
  std::vector<CounterRng> streams_;
};

}  // namespace dampspde
