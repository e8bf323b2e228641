#include <cmath>
#include <numbers>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "dampspde/integrator.hpp"

using namespace dampspde;
using std::numbers::pi;

namespace {

// Composite Simpson of int_0^h g g^T dr with g(r) = (exp(rA) b, 1, r).
Eigen::Matrix4d joint_oracle(const ModeMatrix& m, const Eigen::Vector2d& b, double h, int panels = 4000) {
  Eigen::Matrix4d acc = Eigen::Matrix4d::Zero();
  const double dr = h / panels;
  for (int i = 0; i <= panels; ++i) {
    const double r = i * dr;
    Eigen::Vector4d g;
    g.head<2>() = (r * m.matrix()).exp() * b;
    g[2] = 1.0;
    g[3] = r;
    const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * g * g.transpose();
  }
  return acc * dr / 3.0;
}

// Solves A P + P A^T + b b^T = 0 through the Kronecker form.
Eigen::Matrix2d lyapunov(const ModeMatrix& m, const Eigen::Vector2d& b) {
  const Eigen::Matrix2d A = m.matrix(), I = Eigen::Matrix2d::Identity();
  Eigen::Matrix4d K;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) K.block<2, 2>(2 * i, 2 * j) = A(i, j) * I + (i == j ? 1.0 : 0.0) * A;
  const Eigen::Matrix2d Q = b * b.transpose();
  const Eigen::Vector4d p = K.fullPivLu().solve(-Eigen::Map<const Eigen::Vector4d>(Q.data()));
  return Eigen::Map<const Eigen::Matrix2d>(p.data());
}

CoefficientSpec named(const std::string& name, std::map<std::string, double> params = {}) {
  CoefficientSpec s;
  s.name = name;
  s.params = std::move(params);
  return s;
}

SimulationSetup point_setup(int cutoff, double dt, double T) {
  SimulationSetup s;
  s.trunc = enumerate_modes(BoxDomain{}, EquationKind::plate, cutoff);
  s.rho = 1.0;
  s.noise.point = PointChannel{{0.3}};
  s.C = named("constant", {{"value", 1.0}});
  s.u0 = Eigen::VectorXd::Zero(cutoff);
  s.v0 = Eigen::VectorXd::Zero(cutoff);
  s.T = T;
  s.dt = dt;
  return s;
}

double energy(const ModeMatrix& m, double u, double v) { return m.a * u * u + v * v; }

}  // namespace

TEST(Covariance, StationaryLimitMatchesLyapunov) {
  const Eigen::Vector2d b(0.0, 1.0);
  const auto m = mode_matrix(1.0, 2.0);
  const Eigen::Matrix2d P = stochastic_convolution_covariance(m, b, 50.0 / m.damping);
  EXPECT_NEAR(P(0, 0), 0.25, 1e-8);
  EXPECT_NEAR(P(1, 1), 0.25, 1e-8);
  EXPECT_NEAR(P(0, 1), 0.0, 1e-8);
  for (double a : {0.5, 3.0, 40.0})
    for (double rho : {0.4, 1.0, 3.0}) {
      const auto mm = mode_matrix(a, rho);
      const Eigen::Vector2d bs(0.0, 1.7);
      const Eigen::Matrix2d lim = lyapunov(mm, bs);
      // The slowest rate is |Re lambda_+|, which is below c/2 once overdamped.
      const double horizon = 50.0 / std::min(mm.damping, -2.0 * mm.lambda_plus.real());
      EXPECT_LT((stochastic_convolution_covariance(mm, bs, horizon) - lim).cwiseAbs().maxCoeff(),
                1e-8 * lim.cwiseAbs().maxCoeff())
          << "a " << a << " rho " << rho;
      EXPECT_NEAR(lim(0, 0), 1.7 * 1.7 / (2.0 * mm.damping * a), 1e-12);
    }
}

TEST(Covariance, SmallStepLeadingOrderAndZero) {
  const Eigen::Vector2d b(0.3, -1.2);
  const auto m = mode_matrix(5.0, 1.0);
  const double dt = 1e-6;
  const Eigen::Matrix2d P = stochastic_convolution_covariance(m, b, dt);
  EXPECT_LT((P / dt - b * b.transpose()).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_EQ(stochastic_convolution_covariance(m, Eigen::Vector2d::Zero(), 0.1), Eigen::Matrix2d::Zero());
  EXPECT_THROW(stochastic_convolution_covariance(m, b, 0.0), ConfigError);
}

TEST(Covariance, JointMatchesQuadrature) {
  const Eigen::Vector2d b(0.0, 1.0);
  for (double a : {1.0, 97.4, 2.5e3})
    for (double rho : {0.5, 2.0, 3.0})
      for (double h : {1e-3, 0.05, 0.4}) {
        const auto m = mode_matrix(a, rho);
        const Eigen::Matrix4d J = joint_increment_covariance(m, b, h);
        const Eigen::Matrix4d ref = joint_oracle(m, b, h, 16000);
        const Eigen::Matrix4d scale = (ref.diagonal().cwiseSqrt() * ref.diagonal().cwiseSqrt().transpose());
        EXPECT_LT((J - ref).cwiseQuotient(scale).cwiseAbs().maxCoeff(), 1e-9) << a << " " << rho << " " << h;
        const Eigen::Matrix2d P = stochastic_convolution_covariance(m, b, h);
        EXPECT_LT((J.topLeftCorner(2, 2) - P).cwiseAbs().maxCoeff(), 1e-14 * P.cwiseAbs().maxCoeff());
      }
}

TEST(StepPlan, FactorsReproduceJointLaw) {
  // xi = K z + L z' with (dw, dI) = T z must reproduce the joint covariance.
  BoxDomain dom;
  dom.lengths = {4.0};
  const auto t = enumerate_modes(dom, EquationKind::plate, 48);
  for (double dt : {1.0 / 4096, 1.0 / 64}) {
    const auto plan = make_step_plan(t, 0.7, dt);
    const double sq = std::sqrt(dt);
    Eigen::Matrix2d T;
    T << sq, 0.0, 0.5 * dt * sq, dt * sq / (2.0 * std::sqrt(3.0));
    for (std::size_t k = 0; k < t.size(); ++k) {
      const Eigen::Matrix4d J = joint_oracle(plan.mm[k], Eigen::Vector2d(0.0, 1.0), dt, 2000);
      const Eigen::Matrix2d cross = plan.K[k] * T.transpose();
      const Eigen::Matrix2d own = plan.K[k] * plan.K[k].transpose() + plan.L[k] * plan.L[k].transpose();
      const double su = std::sqrt(J(0, 0)), sv = std::sqrt(J(1, 1));
      EXPECT_NEAR(own(0, 0) / J(0, 0), 1.0, 1e-7) << "mode " << k << " dt " << dt;
      EXPECT_NEAR(own(1, 1) / J(1, 1), 1.0, 1e-7) << "mode " << k << " dt " << dt;
      EXPECT_NEAR((own(0, 1) - J(0, 1)) / (su * sv), 0.0, 1e-7);
      EXPECT_NEAR((cross(0, 0) - J(0, 2)) / (su * std::sqrt(J(2, 2))), 0.0, 1e-7);
      EXPECT_NEAR((cross(1, 1) - J(1, 3)) / (sv * std::sqrt(J(3, 3))), 0.0, 1e-7);
      EXPECT_EQ(plan.E[k], mode_exp(plan.mm[k], dt));
    }
  }
  EXPECT_THROW(make_step_plan(t, 1.0, 0.0), ConfigError);
}

TEST(Step, ZeroNoiseIsSemigroup) {
  auto s = point_setup(12, 1.0 / 256, 1.0);
  s.noise = {};
  for (Eigen::Index k = 0; k < 12; ++k) {
    s.u0[k] = 1.0 / (1 + k);
    s.v0[k] = std::pow(-1.0, k);
  }
  s.output_steps = {0, 256};
  const auto traj = run_path(s, 1);
  ASSERT_EQ(traj.snapshots.size(), 2u);
  const auto ref = free_flow(s, 1.0);
  EXPECT_LT((traj.snapshots[1].u - ref.u).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((traj.snapshots[1].v - ref.v).cwiseAbs().maxCoeff(), 1e-10);

  const auto plan = make_step_plan(s.trunc, s.rho, s.dt);
  StateField x{s.u0, s.v0, 0.0};
  const auto one = step_deterministic(x, plan, Eigen::VectorXd());
  for (Eigen::Index k = 0; k < 12; ++k) {
    const Eigen::Vector2d e = plan.E[static_cast<std::size_t>(k)] * Eigen::Vector2d(s.u0[k], s.v0[k]);
    EXPECT_EQ(one.u[k], e[0]);
    EXPECT_EQ(one.v[k], e[1]);
  }
  EXPECT_DOUBLE_EQ(one.t, s.dt);
}

TEST(Step, TwoHalfStepsComposeToOne) {
  auto s = point_setup(8, 1.0 / 64, 1.0);
  const auto p1 = make_step_plan(s.trunc, s.rho, s.dt), p2 = make_step_plan(s.trunc, s.rho, 0.5 * s.dt);
  Eigen::VectorXd F(8);
  for (Eigen::Index k = 0; k < 8; ++k) F[k] = 0.5 - 0.1 * k;
  StateField x{Eigen::VectorXd::LinSpaced(8, 1.0, -1.0), Eigen::VectorXd::LinSpaced(8, 0.3, 2.0), 0.0};
  // Constant forcing: variation of constants is exact for any step split.
  const auto a = step_deterministic(x, p1, F);
  const auto b = step_deterministic(step_deterministic(x, p2, F), p2, F);
  EXPECT_LT((a.u - b.u).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((a.v - b.v).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Step, EmpiricalCovarianceMatchesDiscreteLyapunov) {
  auto s = point_setup(1, 1.0 / 16, 1.0);
  s.output_steps = {16};
  const PathIntegrator integ(s);
  ASSERT_EQ(integ.scheme(), Scheme::exact_linear_additive);
  const double amp = point_mass_coefficients(s.trunc, {0.3})[0];
  const auto m = mode_matrix(s.trunc.modes[0].a, s.rho);
  const Eigen::Matrix2d Q = amp * amp * stochastic_convolution_covariance(m, Eigen::Vector2d(0.0, 1.0), s.dt);
  const Eigen::Matrix2d E = mode_exp(m, s.dt);
  Eigen::Matrix2d ref = Eigen::Matrix2d::Zero(), Ej = Eigen::Matrix2d::Identity();
  for (int j = 0; j < 16; ++j) {
    ref += Ej * Q * Ej.transpose();
    Ej = E * Ej;
  }
  const int paths = 10000;
  Eigen::Matrix2d emp = Eigen::Matrix2d::Zero();
  for (int p = 0; p < paths; ++p) {
    const auto traj = integ.run(99, static_cast<std::uint64_t>(p));
    const Eigen::Vector2d x(traj.snapshots.back().u[0], traj.snapshots.back().v[0]);
    emp += x * x.transpose();
  }
  emp /= paths;
  EXPECT_NEAR(emp(0, 0) / ref(0, 0), 1.0, 0.05);
  EXPECT_NEAR(emp(1, 1) / ref(1, 1), 1.0, 0.05);
  EXPECT_NEAR((emp(0, 1) - ref(0, 1)) / std::sqrt(ref(0, 0) * ref(1, 1)), 0.0, 0.05);
}

TEST(Step, LinearForcingConvergesFirstOrder) {
  // f(u) = -u on one mode is the shifted ODE u'' + c u' + (a + 1) u = 0.
  SimulationSetup s = point_setup(1, 1e-2, 1.0);
  s.noise = {};
  s.f = named("linear", {{"u", -1.0}});
  s.u0[0] = 1.0;
  s.v0[0] = -0.5;
  const double a = s.trunc.modes[0].a;
  Eigen::Matrix2d A;
  A << 0.0, 1.0, -(a + 1.0), -s.rho * std::sqrt(a);
  const Eigen::Vector2d exact = A.exp() * Eigen::Vector2d(1.0, -0.5);
  std::vector<double> err;
  for (double dt : {1e-2, 1e-3, 1e-4}) {
    s.dt = dt;
    s.output_steps = {static_cast<std::uint64_t>(std::llround(1.0 / dt))};
    const PathIntegrator integ(s);
    EXPECT_EQ(integ.scheme(), Scheme::exponential_euler);
    const auto traj = integ.run(0, 0);
    err.push_back(std::hypot(traj.snapshots.back().u[0] - exact[0], (traj.snapshots.back().v[0] - exact[1]) / std::sqrt(a)));
  }
  EXPECT_GE(std::log10(err[0] / err[1]), 1.0 - 0.05);
  EXPECT_GE(std::log10(err[1] / err[2]), 1.0 - 0.05);
}

TEST(RunPath, ZeroDataZeroNoiseStaysZero) {
  auto s = point_setup(10, 1.0 / 128, 0.5);
  s.noise = {};
  const auto traj = run_path(s, 3);
  EXPECT_EQ(traj.snapshots.size(), 65u);
  for (const auto& snap : traj.snapshots) {
    EXPECT_EQ(snap.u.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(snap.v.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(RunPath, DeterministicDecay) {
  // Each mode's energy a u^2 + v^2 is nonincreasing (its derivative is -2 c v^2),
  // and decays like exp(-2 r t) with r the slowest modal rate |Re lambda_+|.
  for (double rho : {0.5, 1.0, 3.0}) {
    auto s = point_setup(8, 1.0 / 256, 1.0);
    s.noise = {};
    s.rho = rho;
    s.u0.setConstant(1.0);
    s.v0.setConstant(-2.0);
    double r = INFINITY;
    for (const auto& mode : s.trunc.modes) r = std::min(r, -mode_matrix(mode.a, rho).lambda_plus.real());
    const double T = std::ceil(20.0 / r * 256) / 256;
    s.T = T;
    s.output_steps.clear();
    for (std::uint64_t j = 0; j <= static_cast<std::uint64_t>(std::llround(T * 256)); j += 8) s.output_steps.push_back(j);
    const auto traj = run_path(s, 0);
    auto total = [&](const Snapshot& x) {
      double e = 0.0;
      for (std::size_t k = 0; k < s.trunc.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        e += energy(mode_matrix(s.trunc.modes[k].a, rho), x.u[kk], x.v[kk]);
      }
      return std::sqrt(e);
    };
    const double e0 = total(traj.snapshots.front());
    double prev = e0;
    for (const auto& snap : traj.snapshots) {
      const double e = total(snap);
      EXPECT_LE(e, prev * (1.0 + 1e-12)) << "rho " << rho << " t " << snap.t;
      prev = e;
    }
    EXPECT_LT(prev, 1e-6 * e0) << "rho " << rho;
  }
}

TEST(RunPath, SeedDeterminismAndPathIndependence) {
  auto s = point_setup(16, 1.0 / 512, 0.25);
  s.output_steps = {0, 64, 128};
  const PathIntegrator integ(s);
  const auto a = integ.run(11, 2), b = integ.run(11, 2), c = integ.run(12, 2), d = integ.run(11, 3);
  ASSERT_EQ(a.snapshots.size(), 3u);
  for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
    EXPECT_EQ(a.snapshots[i].u, b.snapshots[i].u);
    EXPECT_EQ(a.snapshots[i].v, b.snapshots[i].v);
  }
  EXPECT_NE(a.snapshots.back().u, c.snapshots.back().u);
  EXPECT_NE(a.snapshots.back().u, d.snapshots.back().u);
  EXPECT_EQ(a.path_id, 2u);
  EXPECT_EQ(a.steps, 128u);
}

TEST(RunPath, ObserverReceivesOutputSteps) {
  auto s = point_setup(4, 1.0 / 64, 1.0);
  s.output_steps = {0, 32, 64};
  std::vector<std::uint64_t> seen;
  const auto traj = PathIntegrator(s).run(1, 0, [&](const Snapshot& x) { seen.push_back(x.step); });
  EXPECT_EQ(seen, s.output_steps);
  EXPECT_TRUE(traj.snapshots.empty());
}

TEST(RunPath, IncrementsRecordedWithBrownianLaw) {
  auto s = point_setup(4, 1.0 / 1024, 4.0);
  s.record_increments = true;
  s.output_steps = {0};
  const auto traj = run_path(s, 5);
  const auto& inc = traj.increments;
  ASSERT_EQ(inc.point.size(), 4096u);
  ASSERT_EQ(inc.point_amplitude.size(), 4096u);
  double ww = 0.0, wi = 0.0, ii = 0.0;
  for (const auto& st : inc.point) {
    ww += st.dw * st.dw;
    wi += st.dw * st.dI;
    ii += st.dI * st.dI;
  }
  const double n = 4096.0, h = s.dt;
  // Sample second moments of (dw, dI): h, h^2/2, h^3/3 within five standard errors.
  EXPECT_NEAR(ww / n / h, 1.0, 5.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(wi / n / (h * h / 2), 1.0, 5.0 * std::sqrt(2.5 / n));
  EXPECT_NEAR(ii / n / (h * h * h / 3), 1.0, 5.0 * std::sqrt(2.0 / n));
  for (double c : inc.point_amplitude) EXPECT_EQ(c, 1.0);
  EXPECT_TRUE(inc.forcing.empty());
}

TEST(RunPath, CutoffsShareTheDrivingNoise) {
  auto lo = point_setup(8, 1.0 / 256, 0.5), hi = point_setup(32, 1.0 / 256, 0.5);
  lo.record_increments = hi.record_increments = true;
  const auto a = run_path(lo, 77, 4), b = run_path(hi, 77, 4);
  ASSERT_EQ(a.increments.point.size(), b.increments.point.size());
  for (std::size_t j = 0; j < a.increments.point.size(); ++j) {
    EXPECT_EQ(a.increments.point[j].dw, b.increments.point[j].dw);
    EXPECT_EQ(a.increments.point[j].dI, b.increments.point[j].dI);
  }
  // Mode residuals are keyed by the mode index, so shared modes see identical paths.
  EXPECT_EQ(a.snapshots.back().u, b.snapshots.back().u.head(8));
}

TEST(RunPath, ConfigAndNumericalErrors) {
  auto s = point_setup(4, 0.3, 1.0);
  EXPECT_THROW(PathIntegrator{s}, ConfigError);
  s.dt = 1.0 / 8;
  s.u0 = Eigen::VectorXd::Zero(3);
  EXPECT_THROW(PathIntegrator{s}, ConfigError);
  s.u0 = Eigen::VectorXd::Zero(4);
  s.u0[1] = INFINITY;
  try {
    run_path(s, 0, 6);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step 1 of path 6"), std::string::npos) << e.what();
  }
}
