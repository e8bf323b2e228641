#pragma once
// Verification on simulated paths: weak-form residuals, Hoelder-moment
// regressions, exponent planning, truncation Cauchy decay and the kinematic
// consistency u' = v.
//
// All regularity reports regress second moments E||X(t0+h) - X(t0)||^2;
// pathwise Hoelder constants (Kolmogorov-Chentsov) are not estimated.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dampspde/errors.hpp"
#include "dampspde/integrator.hpp"
#include "dampspde/noise_model.hpp"

namespace dampspde {

inline constexpr const char* kSecondMomentNote =
    "second-moment surrogate: slopes of log2 E||X(t0+h)-X(t0)||^2; pathwise Hoelder constants are not estimated";

// ---------------------------------------------------------------------------
// Weak residual

struct WeakResidualEntry {
  std::size_t mode = 0;       // position in the truncation
  std::uint64_t step = 0;     // checkpoint step
  double residual = 0.0;      // signed
  double scale = 0.0;         // largest term magnitude
  double relative = 0.0;
};

struct WeakResidualReport {
  std::vector<WeakResidualEntry> entries;
  double max_relative = 0.0;
  double dt = 0.0;
  bool damping_dropped = false;
};

/// Composite Simpson over samples g[0..n] with spacing h (n even).
inline double simpson(const std::vector<double>& g, std::size_t n, double h) {
  if (n % 2 != 0) throw ConfigError("Simpson quadrature needs an even number of intervals");
  if (n == 0) return 0.0;
  double s = g[0] + g[n];
  for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * g[i];
  return s * h / 3.0;
}

inline double trapezoid(const std::vector<double>& g, std::size_t n, double h) {
  if (n == 0) return 0.0;
  double s = 0.5 * (g[0] + g[n]);
  for (std::size_t i = 1; i < n; ++i) s += g[i];
  return s * h;
}

enum class TimeQuadrature { simpson, corrected_trapezoid };

/// Per test mode phi = e_k, the doubly integrated identity
///   u_k(t) - u0_k - t v0_k + a int_0^t (t - s) u_k ds + c int_0^t u_k ds - t c u0_k
///     = int_0^t (t - s) [f_k + G e_k(s0)] ds + e_k(s0) int_0^t (t - s) C dw(s) + (b-term)
/// with a the elastic eigenvalue and c = rho sqrt(a) (for the plate
/// <u, Delta^2 phi> = a u_k and -rho <u, Delta phi> = c u_k). Time
/// integrals of u use Simpson on the stored per-step trajectory; the
/// stochastic and forcing terms are summed exactly from the recorded
/// step-frozen integrands and increments (dw, dI).
inline WeakResidualReport weak_residual(const Trajectory& traj, const SimulationSetup& setup,
                                        const std::vector<std::size_t>& test_modes,
                                        const std::vector<std::uint64_t>& checkpoints, bool drop_damping = false,
                                        TimeQuadrature quad = TimeQuadrature::simpson) {
  const auto& inc = traj.increments;
  const std::uint64_t nsteps = traj.steps;
  if (traj.snapshots.size() != nsteps + 1) throw ConfigError("weak residual needs the trajectory stored at every step");
  const bool need_point = setup.noise.point.has_value();
  const bool need_dist = setup.noise.distributed.has_value();
  if ((need_point && inc.point.size() != nsteps) || inc.point_amplitude.size() != nsteps ||
      (need_dist && inc.distributed.size() != nsteps))
    throw ConfigError("weak residual needs persisted increments (enable --persist-increments)");
  const double h = setup.dt;
  const Eigen::VectorXd ek = setup.noise.point ? point_mass_coefficients(setup.trunc, setup.noise.point->s0)
                                               : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(setup.trunc.size()));
  std::vector<double> lam(setup.trunc.size(), 0.0);
  if (setup.noise.distributed) lam = mode_lambdas(*setup.noise.distributed, setup.trunc);

  WeakResidualReport rep;
  rep.dt = h;
  rep.damping_dropped = drop_damping;
  std::vector<double> g(nsteps + 1), gt(nsteps + 1);
  for (std::size_t k : test_modes) {
    if (k >= setup.trunc.size()) throw ConfigError("test mode outside truncation");
    const auto kk = static_cast<Eigen::Index>(k);
    const ModeMatrix m = mode_matrix(setup.trunc.modes[k].a, setup.rho);
    for (std::uint64_t j = 0; j <= nsteps; ++j) g[j] = traj.snapshots[j].u[kk];
    const double u0 = setup.u0[kk], v0 = setup.v0[kk];
    for (std::uint64_t n : checkpoints) {
      if (n > nsteps) throw ConfigError("checkpoint beyond trajectory");
      const double t = static_cast<double>(n) * h;
      for (std::uint64_t j = 0; j <= n; ++j) gt[j] = (t - static_cast<double>(j) * h) * g[j];
      double int_u, int2_u;
      if (quad == TimeQuadrature::simpson) {
        int_u = simpson(g, n, h);
        int2_u = simpson(gt, n, h);
      } else {
        // Trapezoid with the Euler-Maclaurin endpoint term; derivatives from u' = v.
        const auto& v0s = traj.snapshots[0].v;
        const auto& vns = traj.snapshots[n].v;
        int_u = trapezoid(g, n, h) + h * h / 12.0 * (v0s[kk] - vns[kk]);
        const double dg0 = -g[0] + t * v0s[kk], dgn = -g[n];
        int2_u = trapezoid(gt, n, h) + h * h / 12.0 * (dg0 - dgn);
      }

      double rhs = 0.0;
      for (std::uint64_t j = 0; j < n; ++j) {
        const double tj = static_cast<double>(j) * h;
        const double wdet = h * (t - tj) - 0.5 * h * h;
        double F = inc.point_drift[j] * ek[kk];
        if (!inc.forcing.empty()) F += inc.forcing[j][kk];
        rhs += F * wdet;
        if (need_point) {
          const auto& p = inc.point[j];
          rhs += ek[kk] * inc.point_amplitude[j] * ((t - tj - h) * p.dw + p.dI);
        }
        if (need_dist) {
          const auto& p = inc.distributed[j][k];
          rhs += inc.distributed_amplitude * std::sqrt(lam[k]) * ((t - tj - h) * p.dw + p.dI);
        }
      }
      const double terms[] = {g[n], -u0, -t * v0, m.a * int2_u, m.damping * int_u, -t * m.damping * u0, rhs};
      double lhs = terms[0] + terms[1] + terms[2] + terms[3];
      if (!drop_damping) lhs += terms[4] + terms[5];
      double scale = 0.0;
      for (double x : terms) scale = std::max(scale, std::abs(x));
      WeakResidualEntry e{k, n, lhs - rhs, scale, scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0};
      rep.max_relative = std::max(rep.max_relative, e.relative);
      rep.entries.push_back(e);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Hoelder regression

enum class Component { u, v };

/// Weights of the E_{1/2+delta/2} (u) or E_{delta/2} (v) norm, q = 2.
inline Eigen::VectorXd component_weights(const SpectralTruncation& t, Component c, double delta) {
  const double gamma = c == Component::u ? 0.5 + 0.5 * delta : 0.5 * delta;
  Eigen::VectorXd w(static_cast<Eigen::Index>(t.size()));
  for (std::size_t k = 0; k < t.size(); ++k) w[static_cast<Eigen::Index>(k)] = std::pow(t.modes[k].a, 2.0 * gamma);
  return w;  // squared weights a^{2 gamma}
}

struct RegularityReport {
  Component component = Component::v;
  double delta = 0.0;
  std::vector<double> log2_h;
  std::vector<double> log2_moment;
  double measured_slope = 0.0;
  double slope_halfwidth = 0.0;  // 95% band from path blocks
  double predicted_bound = 0.0;
  double tolerance = 0.1;
  bool pass = false;
  bool informational = false;
  int paths = 0;
  int base_points = 0;
  std::string note = kSecondMomentNote;
};

/// Accumulates E||X(t0+h) - X(t0)||^2 over paths for a fixed set of base
/// steps and dyadic lags. Snapshots must have S(t)U0 removed by the caller
/// (see subtract_free_flow).
class HolderAccumulator {
 public:
  HolderAccumulator(std::vector<std::uint64_t> base_steps, std::vector<std::uint64_t> lags, int blocks = 10)
      : base_(std::move(base_steps)), lags_(std::move(lags)), blocks_(blocks) {
    if (lags_.size() < 5) throw ConfigError("Hoelder regression needs at least 5 dyadic scales");
  }

  /// Output steps a path must provide.
  std::vector<std::uint64_t> required_steps() const {
    std::vector<std::uint64_t> s;
    for (auto b : base_) {
      s.push_back(b);
      for (auto l : lags_) s.push_back(b + l);
    }
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
  }

  struct Channel {
    Component comp;
    double delta;
    Eigen::VectorXd w2;
    std::vector<std::vector<double>> sums;  // block x lag
  };

  std::size_t add_channel(Component c, double delta, const SpectralTruncation& t) {
    channels_.push_back({c, delta, component_weights(t, c, delta),
                         std::vector<std::vector<double>>(static_cast<std::size_t>(blocks_), std::vector<double>(lags_.size(), 0.0))});
    return channels_.size() - 1;
  }

  /// Adds one path given its snapshots keyed by step.
  void add_path(std::uint64_t path_index, const std::map<std::uint64_t, StateField>& snaps) {
    const std::size_t blk = static_cast<std::size_t>(path_index % static_cast<std::uint64_t>(blocks_));
    for (auto& ch : channels_) {
      for (std::size_t li = 0; li < lags_.size(); ++li) {
        double acc = 0.0;
        for (auto b : base_) {
          const auto& x0 = snaps.at(b);
          const auto& x1 = snaps.at(b + lags_[li]);
          const Eigen::VectorXd d = ch.comp == Component::u ? Eigen::VectorXd(x1.u - x0.u) : Eigen::VectorXd(x1.v - x0.v);
          acc += d.cwiseAbs2().dot(ch.w2);
        }
        ch.sums[blk][li] += acc / static_cast<double>(base_.size());
      }
    }
    ++paths_;
    ++block_counts_[blk];
  }

  RegularityReport report(std::size_t channel, double dt, double predicted, double tolerance = 0.1) const {
    const auto& ch = channels_.at(channel);
    RegularityReport r;
    r.component = ch.comp;
    r.delta = ch.delta;
    r.predicted_bound = predicted;
    r.tolerance = tolerance;
    r.paths = paths_;
    r.base_points = static_cast<int>(base_.size());
    if (paths_ < 100) throw ConfigError("Hoelder regression needs at least 100 paths");
    std::vector<double> x(lags_.size()), y(lags_.size());
    for (std::size_t li = 0; li < lags_.size(); ++li) {
      double s = 0.0;
      for (int b = 0; b < blocks_; ++b) s += ch.sums[static_cast<std::size_t>(b)][li];
      x[li] = std::log2(static_cast<double>(lags_[li]) * dt);
      y[li] = std::log2(s / paths_);
    }
    r.log2_h = x;
    r.log2_moment = y;
    r.measured_slope = fit_slope(x, y);
    std::vector<double> block_slopes;
    for (int b = 0; b < blocks_; ++b) {
      const auto cnt = block_counts_.count(static_cast<std::size_t>(b)) ? block_counts_.at(static_cast<std::size_t>(b)) : 0;
      if (cnt == 0) continue;
      std::vector<double> yb(lags_.size());
      for (std::size_t li = 0; li < lags_.size(); ++li) yb[li] = std::log2(ch.sums[static_cast<std::size_t>(b)][li] / cnt);
      block_slopes.push_back(fit_slope(x, yb));
    }
    if (block_slopes.size() > 1) {
      double mean = 0.0, var = 0.0;
      for (double s : block_slopes) mean += s;
      mean /= static_cast<double>(block_slopes.size());
      for (double s : block_slopes) var += (s - mean) * (s - mean);
      var /= static_cast<double>(block_slopes.size() - 1);
      r.slope_halfwidth = 1.96 * std::sqrt(var / static_cast<double>(block_slopes.size()));
    }
    r.pass = r.measured_slope / 2.0 >= predicted - tolerance &&
             (r.measured_slope - r.slope_halfwidth) / 2.0 > predicted - 1.5 * tolerance;
    return r;
  }

  static double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sx += x[i];
      sy += y[i];
      sxx += x[i] * x[i];
      sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }

  const std::vector<std::uint64_t>& base_steps() const { return base_; }
  const std::vector<std::uint64_t>& lags() const { return lags_; }

 private:
  std::vector<std::uint64_t> base_, lags_;
  int blocks_;
  int paths_ = 0;
  std::map<std::size_t, int> block_counts_;
  std::vector<Channel> channels_;
};

/// Base steps: `count` points spread over [T/4, T - max lag].
inline std::vector<std::uint64_t> default_base_steps(std::uint64_t n_steps, std::uint64_t max_lag, int count = 8) {
  const std::uint64_t lo = n_steps / 4;
  if (n_steps < lo + max_lag) throw ConfigError("horizon too short for the requested lags");
  const std::uint64_t hi = n_steps - max_lag;
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(lo + (hi - lo) * static_cast<std::uint64_t>(i) / static_cast<std::uint64_t>(count - 1));
  return out;
}

inline std::vector<std::uint64_t> dyadic_lags(int min_exp_steps, int max_exp_steps) {
  std::vector<std::uint64_t> l;
  for (int e = min_exp_steps; e <= max_exp_steps; ++e) l.push_back(std::uint64_t{1} << e);
  return l;
}

// ---------------------------------------------------------------------------
// Exponent planning

struct ExponentProbe {
  Rational alpha, p;  // existence exponents with max theta < alpha - 1/p
  Rational delta, lambda;
  bool informational = false;
};

/// Probes below the bound min{eta, 1/2 - theta_B, 1/2 - theta_C} (and 1 -
/// theta_G): (0, l), (l, 0), (l/2, l/2) with l = 3/4 of the bound, plus the
/// above-threshold probe (bound + 1/10, 1/20), which is informational.
inline std::vector<ExponentProbe> exponent_plan(const AdmissibilityReport& rep, Rational eta = Rational(1, 2)) {
  if (!rep.verdict) {
    std::string msg = "inadmissible:";
    for (const auto& v : rep.violations) msg += " " + v + ";";
    throw ConfigError(msg);
  }
  const Rational mx = std::max(rep.chosen_theta_B, rep.chosen_theta_C);
  const Rational alpha = (Rational(1, 2) + mx) / 2;
  const Rational p = Rational(2) / (alpha - mx);
  const Rational bound = std::min(eta, rep.regularity_bound());
  const Rational l = bound * Rational(3, 4);
  return {{alpha, p, Rational(0), l, false},
          {alpha, p, l, Rational(0), false},
          {alpha, p, l / 2, l / 2, false},
          {alpha, p, bound + Rational(1, 10), Rational(1, 20), true}};
}

// ---------------------------------------------------------------------------
// Kinematic consistency u' = v

struct KinematicReport {
  std::vector<std::uint64_t> strides;  // output spacing in steps
  std::vector<double> errors;          // max over output nodes of the L^2 defect
  std::vector<double> orders;          // log2 ratios of consecutive errors
  double min_order = 0.0;
};

/// Checks u(t_n) - u(0) = int_0^{t_n} v on output grids of spacing H. With
/// M = e_k(s0) int C dw the Ito part of v, the remainder g = v - M + c int M
/// has derivative -a u - c (v - M) + drift, which is C^{3/2} in time, so the
/// trapezoid rule on g is second order in H. The integrals of M are summed
/// per step from the recorded (dw, dI); the innermost double integral uses its
/// conditional mean (h/2) dI - (h^2/12) dw, leaving an O(dt^2) floor.
inline KinematicReport kinematic_consistency(const Trajectory& traj, const SimulationSetup& setup,
                                             const std::vector<std::uint64_t>& strides) {
  const auto& inc = traj.increments;
  const std::uint64_t N = traj.steps;
  if (traj.snapshots.size() != N + 1 || inc.point_amplitude.size() != N)
    throw ConfigError("kinematic check needs per-step snapshots and persisted increments");
  if (setup.noise.distributed) throw ConfigError("kinematic check supports the point channel only");
  const double h = setup.dt;
  // Snapshots may carry only the leading modes (persisted runs).
  const Eigen::Index n = traj.snapshots.front().u.size();
  const Eigen::VectorXd ek = setup.noise.point
                                 ? Eigen::VectorXd(point_mass_coefficients(setup.trunc, setup.noise.point->s0).head(n))
                                 : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd cek(n);
  for (Eigen::Index k = 0; k < n; ++k)
    cek[k] = mode_matrix(setup.trunc.modes[static_cast<std::size_t>(k)].a, setup.rho).damping * ek[k];
  const Eigen::VectorXd u0 = setup.u0.head(n);
  // W_j = sum_{i<j} C_i dw_i, IW_j = int_0^{t_j} W, IIW_j = int_0^{t_j} IW.
  std::vector<double> W(N + 1, 0.0), IW(N + 1, 0.0), IIW(N + 1, 0.0);
  for (std::uint64_t j = 0; j < N; ++j) {
    const double c = inc.point_amplitude[j];
    const auto p = setup.noise.point ? inc.point[j] : BrownianStep{};
    W[j + 1] = W[j] + c * p.dw;
    IW[j + 1] = IW[j] + W[j] * h + c * p.dI;
    IIW[j + 1] = IIW[j] + IW[j] * h + 0.5 * W[j] * h * h + c * (0.5 * h * p.dI - h * h / 12.0 * p.dw);
  }
  auto g = [&](std::uint64_t j) -> Eigen::VectorXd { return traj.snapshots[j].v - W[j] * ek + IW[j] * cek; };
  KinematicReport rep;
  rep.strides = strides;
  for (auto H : strides) {
    if (H == 0 || N % H != 0) throw ConfigError("stride must divide the step count");
    double worst = 0.0;
    Eigen::VectorXd trap = Eigen::VectorXd::Zero(n);
    const double Hs = static_cast<double>(H) * h;
    for (std::uint64_t node = H; node <= N; node += H) {
      trap += 0.5 * Hs * (g(node - H) + g(node));
      const Eigen::VectorXd defect = traj.snapshots[node].u - u0 - trap - IW[node] * ek + IIW[node] * cek;
      worst = std::max(worst, defect.norm());
    }
    rep.errors.push_back(worst);
  }
  rep.min_order = INFINITY;
  for (std::size_t i = 1; i < rep.errors.size(); ++i) {
    const double o = std::log2(rep.errors[i - 1] / rep.errors[i]) /
                     std::log2(static_cast<double>(strides[i - 1]) / static_cast<double>(strides[i]));
    rep.orders.push_back(o);
    rep.min_order = std::min(rep.min_order, o);
  }
  return rep;
}

/// Four dyadic output spacings for the u' = v check: the coarsest H keeps
/// c H dt <= 1 for every stored mode and leaves at least 16 nodes, so the
/// trapezoid error dominates the O(dt^2) floor. Empty if fewer than two fit.
inline std::vector<std::uint64_t> kinematic_strides(const SimulationSetup& setup, std::size_t stored_modes,
                                                    std::uint64_t n_steps) {
  double cmax = 0.0;
  for (std::size_t k = 0; k < std::min(stored_modes, setup.trunc.size()); ++k)
    cmax = std::max(cmax, mode_matrix(setup.trunc.modes[k].a, setup.rho).damping);
  std::uint64_t H = 1;
  while (2 * H * 16 <= n_steps && n_steps % (2 * H) == 0 && cmax * static_cast<double>(2 * H) * setup.dt <= 1.0) H *= 2;
  std::vector<std::uint64_t> out;
  for (; H >= 1 && out.size() < 4; H /= 2) out.push_back(H);
  if (out.size() < 2) out.clear();
  return out;
}

// ---------------------------------------------------------------------------
// Truncation Cauchy decay

struct CauchyReport {
  std::vector<int> cutoffs;
  std::vector<double> rms_difference;  // (E||u^{(2N)}(T) - u^{(N)}(T)||^2)^{1/2}, L^2
  bool monotone = false;
  double decay_slope = 0.0;  // log2 rms difference against log2 N
};

/// Runs the same noise realization at each cutoff (streams are keyed by mode
/// index, so shared modes see identical increments) and compares final
/// positions. `make_setup(N)` must return a setup whose single output step
/// is the final one.
template <class SetupFactory>
CauchyReport truncation_cauchy(SetupFactory&& make_setup, const std::vector<int>& cutoffs, int paths,
                               std::uint64_t seed) {
  if (cutoffs.size() < 2) throw ConfigError("Cauchy check needs at least two cutoffs");
  CauchyReport rep;
  rep.cutoffs = cutoffs;
  std::vector<SimulationSetup> setups;
  for (int N : cutoffs) setups.push_back(make_setup(N));
  std::vector<double> sums(cutoffs.size() - 1, 0.0);
  for (int p = 0; p < paths; ++p) {
    std::vector<std::map<std::vector<int>, double>> finals;
    for (const auto& s : setups) {
      const Trajectory tr = PathIntegrator(s).run(seed, static_cast<std::uint64_t>(p));
      std::map<std::vector<int>, double> m;
      const auto& u = tr.snapshots.back().u;
      for (std::size_t k = 0; k < s.trunc.size(); ++k) m[s.trunc.modes[k].index] = u[static_cast<Eigen::Index>(k)];
      finals.push_back(std::move(m));
    }
    for (std::size_t i = 0; i + 1 < finals.size(); ++i) {
      double acc = 0.0;
      for (const auto& [idx, val] : finals[i + 1]) {
        auto it = finals[i].find(idx);
        const double d = val - (it == finals[i].end() ? 0.0 : it->second);
        acc += d * d;
      }
      sums[i] += acc;
    }
  }
  rep.monotone = true;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < sums.size(); ++i) {
    rep.rms_difference.push_back(std::sqrt(sums[i] / paths));
    if (i > 0 && !(rep.rms_difference[i] < rep.rms_difference[i - 1])) rep.monotone = false;
    x.push_back(std::log2(static_cast<double>(cutoffs[i])));
    y.push_back(std::log2(rep.rms_difference[i]));
  }
  if (x.size() >= 2) rep.decay_slope = HolderAccumulator::fit_slope(x, y);
  return rep;
}

/// X - S(t)U0 on a snapshot.
inline StateField subtract_free_flow(const SimulationSetup& s, const Snapshot& snap) {
  const StateField ff = free_flow(s, snap.t);
  return {snap.u - ff.u, snap.v - ff.v, snap.t};
}

}  // namespace dampspde
