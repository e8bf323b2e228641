#pragma once
// Time stepping of the truncated mild solution. The linear part is
// propagated exactly per mode; additive (or step-frozen) point forcing uses
// the exact Gaussian law of the per-mode stochastic convolution jointly with
// the driving increment (dw, dI); f and G enter by exponential Euler;
// state-dependent distributed noise is mapped through the grid and pushed
// by exp(dt A).

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dampspde/coefficients.hpp"
#include "dampspde/damped_semigroup.hpp"
#include "dampspde/errors.hpp"
#include "dampspde/noise_model.hpp"
#include "dampspde/rng.hpp"
#include "dampspde/spectral_domain.hpp"

namespace dampspde {

/// g_m(z) = int_0^1 x^m e^{z x} dx.
inline cplx gm_integral(int m, cplx z) {
  if (std::abs(z) < 2.0) {
    cplx sum = 0.0, zk = 1.0;
    double fact = 1.0;
    for (int k = 0; k < 60; ++k) {
      if (k > 0) {
        zk *= z;
        fact *= k;
      }
      const cplx term = zk / (fact * (m + k + 1));
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  const cplx ez = std::exp(z);
  cplx g = (ez - 1.0) / z;
  for (int j = 1; j <= m; ++j) g = (ez - static_cast<double>(j) * g) / z;
  return g;
}

/// One term v r^m e^{lambda r} of a vector-valued integrand on [0, h].
struct GaussTerm {
  Eigen::VectorXcd v;
  int m = 0;
  cplx lambda = 0.0;
};

/// int_0^h g(r) g(r)^T dr for g = sum of terms (g real).
inline Eigen::MatrixXd gaussian_integral_covariance(const std::vector<GaussTerm>& terms, double h) {
  const Eigen::Index n = terms.front().v.size();
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& s : terms)
    for (const auto& t : terms) {
      const int p = s.m + t.m;
      const cplx w = std::pow(h, p + 1) * gm_integral(p, h * (s.lambda + std::conj(t.lambda)));
      acc += w * (s.v * t.v.adjoint());
    }
  Eigen::MatrixXd out = acc.real();
  return 0.5 * (out + out.transpose());
}

/// int_0^h g(r) dr.
inline Eigen::VectorXd gaussian_integral_mean(const std::vector<GaussTerm>& terms, double h) {
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(terms.front().v.size());
  for (const auto& s : terms) acc += std::pow(h, s.m + 1) * gm_integral(s.m, h * s.lambda) * s.v;
  return acc.real();
}

/// Terms of r -> exp(rA) b padded with `extra` zero rows. For h |lambda| <= 1/2
/// the Taylor form sum_n A^n b r^n / n! is used (no projector cancellation);
/// otherwise eigen-projectors, or (I, A + sqrt(a) I) in the Jordan case.
inline std::vector<GaussTerm> exp_b_terms(const ModeMatrix& m, const Eigen::Vector2d& b, double h, int extra) {
  std::vector<GaussTerm> out;
  auto padded = [&](const Eigen::Vector2cd& x) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(2 + extra);
    v.head<2>() = x;
    return v;
  };
  if (h * std::abs(m.lambda_minus) <= 0.5) {
    const Eigen::Matrix2d A = m.matrix();
    Eigen::Vector2d term = b;
    const double b0 = b.norm();
    for (int n = 0; n < 60; ++n) {
      if (n > 0) term = A * term / static_cast<double>(n);
      out.push_back({padded(term.cast<cplx>()), n, 0.0});
      if (term.norm() * std::pow(h, n) < 1e-19 * (b0 > 0.0 ? b0 : 1.0)) break;
    }
    return out;
  }
  for (const auto& e : exp_terms(m)) out.push_back({padded(e.P * b.cast<cplx>()), e.power, e.lambda});
  return out;
}

/// Exact covariance of int_0^dt exp(rA) b dw(r).
inline Eigen::Matrix2d stochastic_convolution_covariance(const ModeMatrix& m, const Eigen::Vector2d& b, double dt) {
  if (!(dt > 0.0)) throw ConfigError("covariance needs dt > 0");
  if (b.squaredNorm() == 0.0) return Eigen::Matrix2d::Zero();
  return gaussian_integral_covariance(exp_b_terms(m, b, dt, 0), dt);
}

/// Joint covariance of (xi_u, xi_v, dw, dI) where xi is the convolution
/// increment driven by w, dw = w(dt), dI = int_0^dt w.
inline Eigen::Matrix4d joint_increment_covariance(const ModeMatrix& m, const Eigen::Vector2d& b, double dt) {
  auto terms = exp_b_terms(m, b, dt, 2);
  GaussTerm one, ramp;
  one.v = Eigen::VectorXcd::Zero(4);
  one.v[2] = 1.0;
  ramp.v = Eigen::VectorXcd::Zero(4);
  ramp.v[3] = 1.0;
  ramp.m = 1;
  terms.push_back(one);
  terms.push_back(ramp);
  return gaussian_integral_covariance(terms, dt);
}

/// <x^m - P x^m, x^n - P x^n> on L^2(0,1), P the projection onto span{1, x}.
inline double residual_gram(int m, int n) {
  const double vm0 = 1.0 / (m + 1), vm1 = 1.0 / (m + 2), vn0 = 1.0 / (n + 1), vn1 = 1.0 / (n + 2);
  // inverse Gram of {1, x} is [[4, -6], [-6, 12]]
  return 1.0 / (m + n + 1) - (vm0 * (4.0 * vn0 - 6.0 * vn1) + vm1 * (-6.0 * vn0 + 12.0 * vn1));
}

/// Covariance of the convolution increment conditional on (dw, dI), from the
/// Taylor form exp(rA) b = sum_n A^n b r^n / n!: the n = 0, 1 terms lie in
/// span{1, r} and drop out, so no subtraction of nearly equal covariances
/// occurs. Valid for h |lambda| <= 1/2.
inline Eigen::Matrix2d conditional_covariance_series(const ModeMatrix& m, const Eigen::Vector2d& b, double h) {
  const Eigen::Matrix2d A = m.matrix();
  std::vector<Eigen::Vector2d> c;  // A^n b h^n / n!
  Eigen::Vector2d term = b;
  for (int n = 0; n < 60; ++n) {
    if (n > 0) term = A * term * (h / n);
    c.push_back(term);
    if (n >= 3 && term.norm() < 1e-18 * c[2].norm()) break;
  }
  Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
  for (std::size_t i = 2; i < c.size(); ++i)
    for (std::size_t j = 2; j < c.size(); ++j)
      S += residual_gram(static_cast<int>(i), static_cast<int>(j)) * c[i] * c[j].transpose();
  return h * 0.5 * (S + S.transpose());
}

/// Lower Cholesky factor of a 2x2 covariance. Each pivot is floored at
/// 1e-14 times its own diagonal entry, which absorbs rounding in the Schur
/// complement without injecting variance into nearly deterministic slots.
inline Eigen::Matrix2d cholesky_floor(const Eigen::Matrix2d& C) {
  const double f0 = 1e-14 * std::max(C(0, 0), 0.0), f1 = 1e-14 * std::max(C(1, 1), 0.0);
  Eigen::Matrix2d L = Eigen::Matrix2d::Zero();
  const double l11 = std::sqrt(std::max(C(0, 0), f0));
  L(0, 0) = l11;
  L(1, 0) = l11 > 0.0 ? C(1, 0) / l11 : 0.0;
  L(1, 1) = std::sqrt(std::max(C(1, 1) - L(1, 0) * L(1, 0), f1));
  return L;
}

// ---------------------------------------------------------------------------

enum class Scheme { exact_linear_additive, exponential_euler };

/// Per-mode caches for a fixed dt. For the unit forcing direction b = (0, 1)
/// the convolution increment over one step is xi = K z + L z' where
/// (dw, dI) = T z with z ~ N(0, I) the driving pair and z' independent.
struct StepPlan {
  double dt = 0.0;
  std::vector<ModeMatrix> mm;
  std::vector<Eigen::Matrix2d> E;
  std::vector<Eigen::Vector2d> forcing;  // int_0^dt exp(rA) dr (0, 1)^T
  std::vector<Eigen::Matrix2d> K;
  std::vector<Eigen::Matrix2d> L;
};

inline StepPlan make_step_plan(const SpectralTruncation& t, double rho, double dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  StepPlan p;
  p.dt = dt;
  const Eigen::Vector2d e2(0.0, 1.0);
  const double sq = std::sqrt(dt);
  Eigen::Matrix2d Tm;  // (dw, dI) = Tm z
  Tm << sq, 0.0, 0.5 * dt * sq, dt * sq / (2.0 * std::sqrt(3.0));
  const Eigen::Matrix2d TinvT = Tm.inverse().transpose();
  for (const auto& mode : t.modes) {
    const ModeMatrix m = mode_matrix(mode.a, rho);
    p.mm.push_back(m);
    p.E.push_back(mode_exp(m, dt));
    p.forcing.push_back(gaussian_integral_mean(exp_b_terms(m, e2, dt, 0), dt));
    const Eigen::Matrix4d J = joint_increment_covariance(m, e2, dt);
    const Eigen::Matrix2d Kz = J.block<2, 2>(0, 2) * TinvT;
    p.K.push_back(Kz);
    const Eigen::Matrix2d cond = dt * std::abs(m.lambda_minus) <= 0.5 ? conditional_covariance_series(m, e2, dt)
                                                                        : Eigen::Matrix2d(J.block<2, 2>(0, 0) - Kz * Kz.transpose());
    p.L.push_back(cholesky_floor(cond));
  }
  return p;
}

struct StateField {
  Eigen::VectorXd u, v;
  double t = 0.0;
};

/// Everything run_path needs; built from a scenario.
struct SimulationSetup {
  SpectralTruncation trunc;
  double rho = 1.0;
  NoiseSpec noise;
  CoefficientSpec f, b, G, C;
  Eigen::VectorXd u0, v0;
  double T = 1.0;
  double dt = 1.0 / 1024;
  std::vector<std::uint64_t> output_steps;  // sorted; empty: every step
  bool record_increments = false;
  bool record_fine = false;  // keep every step (weak residual)
};

struct Snapshot {
  std::uint64_t step = 0;
  double t = 0.0;
  Eigen::VectorXd u, v;
};

struct IncrementRecord {
  std::vector<BrownianStep> point;       // per step
  std::vector<double> point_amplitude;   // frozen C per step
  std::vector<double> point_drift;       // frozen G per step
  std::vector<Eigen::VectorXd> forcing;  // frozen f coefficients per step (only when f is nonzero)
  std::vector<std::vector<BrownianStep>> distributed;  // unit-variance (d beta_k, dJ_k) per step, additive case
  double distributed_amplitude = 0.0;                   // constant b
};

struct Trajectory {
  std::uint64_t path_id = 0;
  std::vector<Snapshot> snapshots;
  IncrementRecord increments;
  std::uint64_t steps = 0;
};

/// Observer invoked at each output step.
using SnapshotObserver = std::function<void(const Snapshot&)>;

class PathIntegrator {
 public:
  explicit PathIntegrator(const SimulationSetup& s)
      : s_(s), plan_(make_step_plan(s.trunc, s.rho, s.dt)), grid_(dealiased_grid(s.trunc)) {
    const std::size_t n = s.trunc.size();
    if (static_cast<std::size_t>(s.u0.size()) != n || static_cast<std::size_t>(s.v0.size()) != n)
      throw ConfigError("initial data length does not match truncation");
    f_ = make_nemytskii(s.f);
    b_ = make_nemytskii(s.b);
    G_ = make_functional(s.G, s.trunc.domain.volume());
    C_ = make_functional(s.C, s.trunc.domain.volume());
    point_weights_ = s.noise.point ? point_mass_coefficients(s.trunc, s.noise.point->s0) : Eigen::VectorXd::Zero(n);
    if (s.noise.distributed) lambdas_ = mode_lambdas(*s.noise.distributed, s.trunc);
    else lambdas_.assign(n, 0.0);
    needs_grid_ = !f_.is_zero || !G_.state_independent || !C_.state_independent ||
                  (s.noise.distributed && !b_.state_independent);
    scheme_ = (f_.is_zero && G_.is_zero && C_.state_independent && b_.state_independent)
                  ? Scheme::exact_linear_additive
                  : Scheme::exponential_euler;
    const double steps = s.T / s.dt;
    n_steps_ = static_cast<std::uint64_t>(std::llround(steps));
    if (std::abs(steps - static_cast<double>(n_steps_)) > 1e-9 * steps) throw ConfigError("dt must divide T");
  }

  Scheme scheme() const { return scheme_; }
  std::uint64_t n_steps() const { return n_steps_; }
  const StepPlan& plan() const { return plan_; }

  Trajectory run(std::uint64_t seed, std::uint64_t path, const SnapshotObserver& observer = nullptr) const {
    const std::size_t n = s_.trunc.size();
    Trajectory traj;
    traj.path_id = path;
    traj.steps = n_steps_;
    IncrementSampler sampler(s_.noise, s_.trunc, s_.dt, seed, path);
    std::vector<CounterRng> point_res, dist_res, dist_drive;
    for (std::size_t k = 0; k < n; ++k) {
      const std::uint64_t key = IncrementSampler::mode_key(s_.trunc.modes[k].index);
      point_res.emplace_back(seed, derive_stream(path, Channel::mode_residual, key));
      dist_res.emplace_back(seed, derive_stream(path, Channel::mode_residual, ~key));
      dist_drive.emplace_back(seed, derive_stream(path, Channel::distributed, key));
    }
    const CounterRng point_drive(seed, derive_stream(path, Channel::point));
    const bool has_point = s_.noise.point.has_value();
    const bool has_dist = s_.noise.distributed.has_value();
    const bool additive_dist = has_dist && b_.state_independent;
    const double sq = std::sqrt(s_.dt);

    Eigen::VectorXd u = s_.u0, v = s_.v0, F = Eigen::VectorXd::Zero(n), dN = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd ug, vg;
    std::size_t next_out = 0;
    auto wanted = [&](std::uint64_t step) {
      if (s_.output_steps.empty()) return true;
      while (next_out < s_.output_steps.size() && s_.output_steps[next_out] < step) ++next_out;
      return next_out < s_.output_steps.size() && s_.output_steps[next_out] == step;
    };
    // Output steps go to the observer (or the trajectory when there is none);
    // record_fine additionally keeps every step in the trajectory.
    auto emit = [&](std::uint64_t step) {
      const bool out = wanted(step);
      if (!out && !s_.record_fine) return;
      Snapshot snap{step, static_cast<double>(step) * s_.dt, u, v};
      if (out && observer) observer(snap);
      if (s_.record_fine || (out && !observer)) traj.snapshots.push_back(std::move(snap));
    };
    emit(0);

    const double b_const = b_.state_independent ? b_.fn(0.0, 0.0, 0.0) : 0.0;
    const double C_const = C_.state_independent ? C_.fn(0.0, Eigen::VectorXd(), Eigen::VectorXd(), 1.0) : 0.0;
    const double G_const = G_.state_independent ? G_.fn(0.0, Eigen::VectorXd(), Eigen::VectorXd(), 1.0) : 0.0;
    traj.increments.distributed_amplitude = b_const;

    for (std::uint64_t j = 0; j < n_steps_; ++j) {
      const double t = static_cast<double>(j) * s_.dt;
      double Cj = C_const, Gj = G_const;
      if (needs_grid_) {
        ug = grid_.synthesize(u);
        vg = grid_.synthesize(v);
        if (!C_.state_independent) Cj = C_.fn(t, ug, vg, grid_.cell_volume());
        if (!G_.state_independent) Gj = G_.fn(t, ug, vg, grid_.cell_volume());
      }
      F.setZero();
      if (!f_.is_zero) F = grid_.analyse(nemytskii_on_grid(f_, t, ug, vg));
      if (Gj != 0.0) F += Gj * point_weights_;

      BrownianStep pw{};
      std::array<double, 2> zp{0.0, 0.0};
      if (has_point) {
        zp = point_drive.normal_pair(j);
        pw = {sq * zp[0], s_.dt * sq * (0.5 * zp[0] + zp[1] / (2.0 * std::sqrt(3.0)))};
      }
      if (has_dist && !additive_dist) {
        Eigen::VectorXd dW = Eigen::VectorXd::Zero(n);
        for (std::size_t k = 0; k < n; ++k) dW[k] = sampler.distributed(k, j).dw;
        const Eigen::VectorXd field = grid_.synthesize(dW).cwiseProduct(nemytskii_on_grid(b_, t, ug, vg));
        dN = grid_.analyse(field);
      }

      if (s_.record_increments && additive_dist) traj.increments.distributed.emplace_back(n);
      for (std::size_t k = 0; k < n; ++k) {
        const Eigen::Matrix2d& E = plan_.E[k];
        const double u0 = u[k], v0 = v[k];
        double un = E(0, 0) * u0 + E(0, 1) * v0;
        double vn = E(1, 0) * u0 + E(1, 1) * v0;
        if (F[k] != 0.0) {
          un += plan_.forcing[k][0] * F[k];
          vn += plan_.forcing[k][1] * F[k];
        }
        if (has_point) {
          const double amp = Cj * point_weights_[k];
          if (amp != 0.0) {
            const auto zr = point_res[k].normal_pair(j);
            const Eigen::Matrix2d& K = plan_.K[k];
            const Eigen::Matrix2d& L = plan_.L[k];
            un += amp * (K(0, 0) * zp[0] + K(0, 1) * zp[1] + L(0, 0) * zr[0]);
            vn += amp * (K(1, 0) * zp[0] + K(1, 1) * zp[1] + L(1, 0) * zr[0] + L(1, 1) * zr[1]);
          }
        }
        if (has_dist) {
          if (additive_dist) {
            const double amp = b_const * std::sqrt(lambdas_[k]);
            if (amp != 0.0) {
              const auto z = dist_drive[k].normal_pair(j);
              if (s_.record_increments)
                traj.increments.distributed.back()[k] = {sq * z[0], s_.dt * sq * (0.5 * z[0] + z[1] / (2.0 * std::sqrt(3.0)))};
              const auto zr = dist_res[k].normal_pair(j);
              const Eigen::Matrix2d& K = plan_.K[k];
              const Eigen::Matrix2d& L = plan_.L[k];
              un += amp * (K(0, 0) * z[0] + K(0, 1) * z[1] + L(0, 0) * zr[0]);
              vn += amp * (K(1, 0) * z[0] + K(1, 1) * z[1] + L(1, 0) * zr[0] + L(1, 1) * zr[1]);
            }
          } else if (dN[k] != 0.0) {
            un += E(0, 1) * dN[k];
            vn += E(1, 1) * dN[k];
          }
        }
        u[k] = un;
        v[k] = vn;
      }
      if (!u.allFinite() || !v.allFinite())
        throw NumericalError("non-finite state at step " + std::to_string(j + 1) + " of path " + std::to_string(path));
      if (s_.record_increments) {
        traj.increments.point.push_back(pw);
        traj.increments.point_amplitude.push_back(Cj);
        traj.increments.point_drift.push_back(Gj);
        if (!f_.is_zero) traj.increments.forcing.push_back(F - Gj * point_weights_);
      }
      emit(j + 1);
    }
    return traj;
  }

 private:
  const SimulationSetup& s_;
  StepPlan plan_;
  SineGrid grid_;
  NemytskiiMap f_, b_;
  ScalarFunctional G_, C_;
  Eigen::VectorXd point_weights_;
  std::vector<double> lambdas_;
  bool needs_grid_ = false;
  Scheme scheme_ = Scheme::exact_linear_additive;
  std::uint64_t n_steps_ = 0;
};

/// Single time step for callers that manage their own loop (zero noise).
inline StateField step_deterministic(const StateField& s, const StepPlan& plan, const Eigen::VectorXd& forcing) {
  StateField out = s;
  for (Eigen::Index k = 0; k < s.u.size(); ++k) {
    const auto& E = plan.E[static_cast<std::size_t>(k)];
    const auto& P = plan.forcing[static_cast<std::size_t>(k)];
    const double f = forcing.size() ? forcing[k] : 0.0;
    out.u[k] = E(0, 0) * s.u[k] + E(0, 1) * s.v[k] + P[0] * f;
    out.v[k] = E(1, 0) * s.u[k] + E(1, 1) * s.v[k] + P[1] * f;
  }
  out.t = s.t + plan.dt;
  return out;
}

inline Trajectory run_path(const SimulationSetup& setup, std::uint64_t seed, std::uint64_t path = 0) {
  return PathIntegrator(setup).run(seed, path);
}

/// Deterministic flow S(t) U0 evaluated per mode.
inline StateField free_flow(const SimulationSetup& s, double t) {
  StateField out{s.u0, s.v0, t};
  for (std::size_t k = 0; k < s.trunc.size(); ++k) {
    const Eigen::Matrix2d E = mode_exp(mode_matrix(s.trunc.modes[k].a, s.rho), t);
    const auto kk = static_cast<Eigen::Index>(k);
    out.u[kk] = E(0, 0) * s.u0[kk] + E(0, 1) * s.v0[kk];
    out.v[kk] = E(1, 0) * s.u0[kk] + E(1, 1) * s.v0[kk];
  }
  return out;
}

}  // namespace dampspde
