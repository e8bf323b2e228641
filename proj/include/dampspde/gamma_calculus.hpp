#pragma once
// gamma-radonifying norms of finite-rank operators H -> L^q(grid): the
// square function, a Monte-Carlo Gaussian-sum estimate, the ideal
// property, and empirical L^2_gamma-Lipschitz constants of Nemytskii maps.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dampspde/errors.hpp"
#include "dampspde/rng.hpp"

namespace dampspde {

/// Columns are the images R h_n of an orthonormal family, sampled on a
/// uniform grid with cell volume `cell`. Optional per-column weights carry a
/// discrete time measure (column n stands for Phi(t_i) h_j with weight mu_i).
struct FiniteRankOperator {
  Eigen::MatrixXd columns;  // grid points x rank
  double q = 2.0;
  double cell = 1.0;
  Eigen::VectorXd weights;  // empty: all ones

  Eigen::Index rank() const { return columns.cols(); }
  Eigen::Index grid_size() const { return columns.rows(); }
  double weight(Eigen::Index n) const { return weights.size() ? weights[n] : 1.0; }
};

enum class GammaMethod { square_function, mc_gaussian };

struct GammaNormEstimate {
  double value = 0.0;
  GammaMethod method = GammaMethod::square_function;
  std::int64_t mc_samples = 0;
  double ci_halfwidth = 0.0;
};

inline double lq_grid_norm(const Eigen::VectorXd& v, double q, double cell) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) s += std::pow(std::abs(v[j]), q);
  return std::pow(cell * s, 1.0 / q);
}

/// Pointwise l^2 aggregate (sum_n w_n |c_n(s)|^2)^{1/2}.
inline Eigen::VectorXd square_function(const FiniteRankOperator& op) {
  Eigen::VectorXd s2 = Eigen::VectorXd::Zero(op.grid_size());
  for (Eigen::Index n = 0; n < op.rank(); ++n) s2 += op.weight(n) * op.columns.col(n).cwiseAbs2();
  return s2.cwiseSqrt();
}

inline GammaNormEstimate gamma_norm_square_function(const FiniteRankOperator& op) {
  if (!(op.q >= 1.0) || !std::isfinite(op.q)) throw ConfigError("square function needs q in [1, inf)");
  GammaNormEstimate e;
  if (op.rank() == 0) return e;
  e.value = lq_grid_norm(square_function(op), op.q, op.cell);
  return e;
}

/// Student t quantile t_{0.975, 19} for 20 batch means.
inline constexpr double kT975_19 = 2.093024054408263;
inline constexpr int kMcBatches = 20;

/// (E ||sum_n gamma_n c_n||_q^2)^{1/2} by sampling. The Gaussian vector is
/// split as gamma = |gamma| U with U uniform on the sphere; since the norm
/// squared is 2-homogeneous, E|gamma|^2 = rank is applied exactly and only U
/// is sampled. Batch b uses stream (seed, batch b); batch means give the
/// 95% half-width on the second moment, mapped to the root by the delta
/// method.
inline GammaNormEstimate gamma_norm_mc(const FiniteRankOperator& op, std::int64_t samples, std::uint64_t seed) {
  if (samples < 100) throw ConfigError("gamma_norm_mc needs at least 100 samples");
  if (!(op.q >= 1.0)) throw ConfigError("gamma_norm_mc needs q >= 1");
  GammaNormEstimate e;
  e.method = GammaMethod::mc_gaussian;
  e.mc_samples = samples;
  const Eigen::Index m = op.rank();
  if (m == 0) return e;
  Eigen::MatrixXd C = op.columns;
  for (Eigen::Index n = 0; n < m; ++n) C.col(n) *= std::sqrt(op.weight(n));

  std::vector<double> batch_mean(kMcBatches, 0.0);
  Eigen::VectorXd g(m), field(op.grid_size());
  for (int b = 0; b < kMcBatches; ++b) {
    const std::int64_t nb = samples / kMcBatches + (b < samples % kMcBatches ? 1 : 0);
    CounterRng rng(seed, derive_stream(static_cast<std::uint64_t>(b), Channel::auxiliary, 0x6a));
    double acc = 0.0;
    for (std::int64_t i = 0; i < nb; ++i) {
      for (Eigen::Index n = 0; n < m; ++n) g[n] = rng.normal();
      const double r = g.norm();
      if (r == 0.0) continue;
      field.noalias() = C * (g / r);
      const double nrm = lq_grid_norm(field, op.q, op.cell);
      acc += static_cast<double>(m) * nrm * nrm;
    }
    batch_mean[b] = acc / static_cast<double>(nb);
  }
  double mean = 0.0;
  for (double v : batch_mean) mean += v;
  mean /= kMcBatches;
  double var = 0.0;
  for (double v : batch_mean) var += (v - mean) * (v - mean);
  var /= (kMcBatches - 1);
  const double hw_sq = kT975_19 * std::sqrt(var / kMcBatches);
  e.value = std::sqrt(mean);
  e.ci_halfwidth = e.value > 0.0 ? hw_sq / (2.0 * e.value) : 0.0;
  return e;
}

struct IdealCheck {
  bool holds = false;
  double lhs = 0.0;    // ||S2 R S1||_gamma
  double rhs = 0.0;    // ||S2|| ||R||_gamma ||S1||
  double ratio = 0.0;  // lhs / ||R||_gamma
};

/// ||S2 R S1||_gamma <= ||S2|| ||R||_gamma ||S1|| for S1 acting on H
/// (rank x rank) and S2 a pointwise multiplier on the grid.
inline IdealCheck ideal_property_check(const FiniteRankOperator& op, const Eigen::MatrixXd& S1,
                                       const Eigen::VectorXd& multiplier, double slack = 1e-9) {
  if (S1.rows() != op.rank() || S1.cols() != op.rank()) throw ConfigError("S1 must be rank x rank");
  if (multiplier.size() != op.grid_size()) throw ConfigError("multiplier must live on the operator grid");
  FiniteRankOperator t = op;
  t.columns = multiplier.asDiagonal() * (op.columns * S1);
  const double r = gamma_norm_square_function(op).value;
  const double s1 = Eigen::JacobiSVD<Eigen::MatrixXd>(S1).singularValues()(0);
  const double s2 = multiplier.cwiseAbs().maxCoeff();
  IdealCheck c;
  c.lhs = gamma_norm_square_function(t).value;
  c.rhs = s2 * r * s1;
  c.ratio = r > 0.0 ? c.lhs / r : 0.0;
  c.holds = c.lhs <= c.rhs * (1.0 + slack);
  return c;
}

/// Scalar Lipschitz function with a declared constant.
struct LipschitzFunction {
  std::function<double(double)> f;
  double lipschitz = -1.0;  // negative: undeclared
  std::string name;
};

/// Discrete time measure: atoms with nonnegative masses.
struct TimeMeasure {
  std::vector<double> times;
  std::vector<double> masses;
};

struct LipschitzEstimate {
  double max_ratio = 0.0;
  double declared = 0.0;
  int trials = 0;
};

/// L^2_gamma(mu; L^q) distance of two space-time fields sampled as
/// grid x atoms matrices: || (sum_i mu_i |x_i - y_i|^2)^{1/2} ||_q.
inline double l2gamma_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const TimeMeasure& mu, double q,
                               double cell) {
  FiniteRankOperator op;
  op.columns = x - y;
  op.q = q;
  op.cell = cell;
  op.weights = Eigen::Map<const Eigen::VectorXd>(mu.masses.data(), static_cast<Eigen::Index>(mu.masses.size()));
  return gamma_norm_square_function(op).value;
}

/// Largest observed ratio ||b(phi1) - b(phi2)|| / ||phi1 - phi2|| over random
/// pairs of simple functions (piecewise constant in time, random smooth
/// spatial profiles on a midpoint grid of (0,1) with `grid_points` cells).
inline LipschitzEstimate estimate_L2gamma_lipschitz(const LipschitzFunction& b, const TimeMeasure& mu, double q,
                                                    int trials, std::uint64_t seed, int grid_points = 128) {
  if (b.lipschitz < 0.0) throw ConfigError("Nemytskii map needs a declared Lipschitz constant");
  if (trials < 10) throw ConfigError("Lipschitz estimate needs at least 10 trials");
  if (mu.masses.empty() || mu.masses.size() != mu.times.size()) throw ConfigError("time measure needs atoms");
  const Eigen::Index nt = static_cast<Eigen::Index>(mu.masses.size());
  const double cell = 1.0 / grid_points;
  CounterRng rng(seed, derive_stream(0, Channel::auxiliary, 0x11));
  auto random_field = [&](double amp) {
    Eigen::MatrixXd x(grid_points, nt);
    for (Eigen::Index i = 0; i < nt; ++i) {
      double c[6];
      for (double& ck : c) ck = amp * rng.normal();
      for (int j = 0; j < grid_points; ++j) {
        const double s = (j + 0.5) * cell;
        double v = 0.0;
        for (int k = 0; k < 6; ++k) v += c[k] * std::sin((k + 1) * std::numbers::pi * s) / (k + 1);
        x(j, i) = v;
      }
    }
    return x;
  };
  LipschitzEstimate est;
  est.declared = b.lipschitz;
  est.trials = trials;
  for (int tr = 0; tr < trials; ++tr) {
    const double amp = std::exp(3.0 * (rng.uniform() - 0.5));
    const Eigen::MatrixXd x = random_field(amp);
    const Eigen::MatrixXd y = x + random_field(amp * std::exp(2.0 * (rng.uniform() - 0.5)));
    const double den = l2gamma_distance(x, y, mu, q, cell);
    if (den == 0.0) continue;
    const double num = l2gamma_distance(x.unaryExpr(b.f), y.unaryExpr(b.f), mu, q, cell);
    est.max_ratio = std::max(est.max_ratio, num / den);
  }
  return est;
}

}  // namespace dampspde
