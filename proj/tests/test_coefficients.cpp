#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "dampspde/coefficients.hpp"

using namespace dampspde;
using std::numbers::pi;

namespace {

SpectralTruncation unit_plate(int N) { return enumerate_modes(BoxDomain{}, EquationKind::plate, N); }

Eigen::VectorXd unit_vector(Eigen::Index n, Eigen::Index k) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e[k] = 1.0;
  return e;
}

CoefficientSpec spec(const std::string& name, std::map<std::string, double> params = {}, std::vector<double> poly = {}) {
  CoefficientSpec s;
  s.name = name;
  s.params = std::move(params);
  s.poly = std::move(poly);
  return s;
}

Eigen::VectorXd random_state(std::mt19937_64& gen, const SpectralTruncation& t, double amp) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd c(static_cast<Eigen::Index>(t.size()));
  for (Eigen::Index k = 0; k < c.size(); ++k) c[k] = amp * nd(gen) / (1.0 + k);
  return c;
}

}  // namespace

TEST(Nemytskii, ZeroAndIdentity) {
  const auto t = unit_plate(16);
  const auto g = dealiased_grid(t);
  const Eigen::VectorXd e1 = unit_vector(16, 0), zero = Eigen::VectorXd::Zero(16);
  EXPECT_EQ(apply_nemytskii(make_nemytskii(spec("zero")), 0.0, e1, e1, g), zero);
  const auto id = make_nemytskii(spec("linear", {{"u", 1.0}}));
  EXPECT_LT((apply_nemytskii(id, 0.0, e1, zero, g) - e1).norm(), 1e-13);
  EXPECT_DOUBLE_EQ(id.lipschitz, 1.0);
}

TEST(Nemytskii, SquareOfFirstModeMatchesAnalyticIntegrals) {
  // u^2 = 2 sin^2(pi s) = 1 - cos(2 pi s); its n-th sine coefficient is
  // -8 sqrt(2) / (pi n (n^2 - 4)) for odd n and 0 for even n.
  const auto t = unit_plate(64);
  const auto g = dealiased_grid(t);
  const auto sq = make_nemytskii(spec("clipped_poly", {{"clip", 10.0}}, {0.0, 0.0, 1.0}));
  const auto c = apply_nemytskii(sq, 0.0, unit_vector(64, 0), Eigen::VectorXd::Zero(64), g);
  for (int n = 1; n <= 9; ++n) {
    const double ref = n % 2 ? -8.0 * std::sqrt(2.0) / (pi * n * (n * n - 4.0)) : 0.0;
    EXPECT_NEAR(c[n - 1], ref, 1e-8) << "n " << n;
  }
}

TEST(Nemytskii, DeclaredLipschitzNeverExceeded) {
  const auto t = unit_plate(24);
  const auto g = dealiased_grid(t);
  std::mt19937_64 gen(13);
  const std::vector<CoefficientSpec> maps = {
      spec("sin", {{"amplitude", 1.5}, {"frequency", 2.0}}),
      spec("linear", {{"u", -0.7}, {"v", 0.4}, {"c", 1.0}}),
      spec("clipped_poly", {{"clip", 1.5}}, {0.1, -1.0, 0.5, 0.3}),
  };
  for (const auto& s : maps) {
    const auto m = make_nemytskii(s);
    for (int i = 0; i < 100; ++i) {
      const auto u1 = random_state(gen, t, 2.0), u2 = random_state(gen, t, 2.0);
      const auto v1 = random_state(gen, t, 2.0), v2 = random_state(gen, t, 2.0);
      const double lhs = (apply_nemytskii(m, 0.0, u1, v1, g) - apply_nemytskii(m, 0.0, u2, v2, g)).norm();
      const double rhs = m.lipschitz * ((u1 - u2).norm() + (v1 - v2).norm());
      EXPECT_LE(lhs, rhs * (1.0 + 1e-6)) << s.name;
    }
  }
}

TEST(Nemytskii, CubicDerivativeBound) {
  // p(x) = x^3 - 3x: p' = 3x^2 - 3, max |p'| on [-2, 2] is 9 at the ends, 3 at 0.
  EXPECT_DOUBLE_EQ(cubic_derivative_bound({0.0, -3.0, 0.0, 1.0}, 2.0), 9.0);
  EXPECT_DOUBLE_EQ(cubic_derivative_bound({0.0, -3.0, 0.0, 1.0}, 0.5), 3.0);
  // p' = 3x^2 + 2x has an interior extremum at x = -1/3 where |p'| = 1/3.
  EXPECT_NEAR(cubic_derivative_bound({0.0, 0.0, 1.0, 1.0}, 0.2), std::max(3 * 0.04 + 0.4, std::abs(3 * 0.04 - 0.4)), 1e-15);
}

TEST(Nemytskii, ReflectionParity) {
  // States built from odd modes are symmetric about s = 1/2; a pointwise map keeps that
  // symmetry, so even-mode coefficients of the image vanish.
  const auto t = unit_plate(16);
  const auto g = dealiased_grid(t);
  std::mt19937_64 gen(21);
  Eigen::VectorXd u = random_state(gen, t, 1.0), v = random_state(gen, t, 1.0);
  for (Eigen::Index k = 1; k < 16; k += 2) u[k] = v[k] = 0.0;
  for (const auto& s : {spec("sin"), spec("clipped_poly", {{"clip", 0.8}}, {0.2, 1.0, -0.5, 0.25}),
                        spec("linear", {{"u", 1.0}, {"v", 2.0}, {"c", 0.5}})}) {
    const auto c = apply_nemytskii(make_nemytskii(s), 0.0, u, v, g);
    for (Eigen::Index k = 1; k < 16; k += 2) EXPECT_NEAR(c[k], 0.0, 1e-12) << s.name << " mode " << k + 1;
  }
}

TEST(Nemytskii, ErrorsSurface) {
  EXPECT_THROW(make_nemytskii(spec("cubic")), ConfigError);
  EXPECT_THROW(make_nemytskii(spec("clipped_poly")), ConfigError);
  EXPECT_THROW(make_nemytskii(spec("clipped_poly", {{"clip", 0.0}}, {1.0})), ConfigError);
  const auto t = unit_plate(4);
  const auto g = dealiased_grid(t);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(4);
  u[0] = INFINITY;
  EXPECT_THROW(apply_nemytskii(make_nemytskii(spec("linear", {{"u", 1.0}})), 0.0, u, Eigen::VectorXd::Zero(4), g),
               NumericalError);
}

TEST(Functional, Examples) {
  const auto t = unit_plate(64);
  const auto g = dealiased_grid(t);
  const Eigen::VectorXd e1 = unit_vector(64, 0), zero = Eigen::VectorXd::Zero(64);
  const auto id = make_functional(spec("integral_identity"), 1.0);
  // Midpoint rule on M points: relative error pi^2 / (24 M^2) for this integrand.
  const double M = g.points_per_axis();
  EXPECT_NEAR(apply_functional(id, 0.0, e1, zero, g), 2.0 * std::sqrt(2.0) / pi,
              2.0 * std::sqrt(2.0) / pi * pi * pi / (24 * M * M) * 1.01);
  BoxDomain b;
  b.lengths = {2.5};
  const auto t2 = enumerate_modes(b, EquationKind::plate, 8);
  const auto g2 = dealiased_grid(t2);
  const auto c = make_functional(spec("constant", {{"value", 3.0}}), b.volume());
  EXPECT_DOUBLE_EQ(apply_functional(c, 0.0, Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(8), g2), 3.0);
  const auto isin = make_functional(spec("integral_sin"), b.volume());
  EXPECT_EQ(apply_functional(isin, 0.0, Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(8), g2), 0.0);
  const auto ione = make_functional(spec("integral_identity", {{"amplitude", 1.0}}), b.volume());
  // int_0^L 1 ds through a constant grid field: recover |S| from the cell volume.
  EXPECT_NEAR(ione.fn(0.0, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g2.size())), Eigen::VectorXd(), g2.cell_volume()),
              2.5, 1e-12);
  EXPECT_THROW(make_functional(spec("point_value"), 1.0), ConfigError);
}

TEST(Functional, DeclaredLipschitzNeverExceeded) {
  BoxDomain b;
  b.lengths = {3.0};
  const auto t = enumerate_modes(b, EquationKind::plate, 16);
  const auto g = dealiased_grid(t);
  std::mt19937_64 gen(5);
  for (const auto& s : {spec("integral_sin", {{"amplitude", 2.0}, {"frequency", 1.5}}), spec("integral_identity")}) {
    const auto f = make_functional(s, b.volume());
    for (int i = 0; i < 100; ++i) {
      const auto u1 = random_state(gen, t, 3.0), u2 = random_state(gen, t, 3.0);
      const auto v = random_state(gen, t, 1.0);
      const double lhs = std::abs(apply_functional(f, 0.0, u1, v, g) - apply_functional(f, 0.0, u2, v, g));
      EXPECT_LE(lhs, f.lipschitz * (u1 - u2).norm() * (1.0 + 1e-6)) << s.name;
    }
  }
}
