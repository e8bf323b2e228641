#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dampspde/noise_model.hpp"

using namespace dampspde;

namespace {

NoiseSpec point_only() {
  NoiseSpec n;
  n.point = PointChannel{{0.3}};
  return n;
}

NoiseSpec distributed(DistributedKind kind, Rational r = Rational(0)) {
  NoiseSpec n;
  DistributedChannel ch;
  ch.kind = kind;
  ch.r = r;
  ch.lambdas = {1.0, 0.5};
  n.distributed = ch;
  return n;
}

SpectralTruncation unit_plate(int N) { return enumerate_modes(BoxDomain{}, EquationKind::plate, N); }

}  // namespace

TEST(Philox, KnownAnswerVectors) {
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (Philox4x32Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (Philox4x32Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (Philox4x32Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, SequentialDrawsAreBatchInvariant) {
  CounterRng a(99, derive_stream(3, Channel::point)), b(99, derive_stream(3, Channel::point));
  std::vector<double> one, two;
  for (int i = 0; i < 101; ++i) one.push_back(a.normal());
  for (int i = 0; i < 37; ++i) two.push_back(b.normal());
  CounterRng c(99, derive_stream(3, Channel::point));
  c.seek(37);
  for (int i = 37; i < 101; ++i) two.push_back(c.normal());
  EXPECT_EQ(one, two);
  EXPECT_NE(derive_stream(3, Channel::point), derive_stream(4, Channel::point));
  EXPECT_NE(derive_stream(3, Channel::point), derive_stream(3, Channel::distributed));
}

TEST(Admissibility, QWindows) {
  const auto p1 = check_admissibility(EquationKind::plate, 1, Rational(7), point_only());
  EXPECT_TRUE(p1.q_window.hi_infinite);
  EXPECT_TRUE(p1.q_ok);
  const auto p2 = check_admissibility(EquationKind::plate, 2, Rational(3, 2), point_only());
  EXPECT_EQ(p2.q_window, open_window(1, 2));
  const auto p3 = check_admissibility(EquationKind::plate, 3, Rational(2), point_only());
  EXPECT_EQ(p3.q_window, open_window(1, Rational(3, 2)));
  EXPECT_FALSE(p3.q_ok);
  EXPECT_FALSE(p3.verdict);
  const auto w3 = check_admissibility(EquationKind::wave, 3, Rational(11, 10), point_only());
  EXPECT_EQ(w3.q_window, open_window(1, Rational(6, 5)));
  EXPECT_TRUE(w3.q_ok);
  const auto w1 = check_admissibility(EquationKind::wave, 1, Rational(2), point_only());
  EXPECT_EQ(w1.q_window, open_window(1, 2));
  EXPECT_FALSE(w1.q_ok);
  EXPECT_FALSE(w1.violations.empty());
}

TEST(Admissibility, ThetaCWindowAndDefaults) {
  const auto r = check_admissibility(EquationKind::plate, 1, Rational(2), point_only());
  EXPECT_EQ(r.theta_C, open_window(Rational(1, 4), Rational(1, 2)));
  EXPECT_EQ(r.chosen_theta_C, Rational(3, 8));
  EXPECT_TRUE(r.verdict);
  // d = 2, q = 3/2: q' = 3, window (1/3, 1/2).
  const auto r2 = check_admissibility(EquationKind::plate, 2, Rational(3, 2), point_only());
  EXPECT_EQ(r2.theta_C, open_window(Rational(1, 3), Rational(1, 2)));
  ThetaOverrides o;
  o.theta_C = Rational(1, 5);
  const auto bad = check_admissibility(EquationKind::plate, 1, Rational(2), point_only(), o);
  EXPECT_FALSE(bad.h5);
  EXPECT_FALSE(bad.verdict);
  o.theta_C = Rational(3, 10);
  const auto good = check_admissibility(EquationKind::plate, 1, Rational(2), point_only(), o);
  EXPECT_TRUE(good.verdict);
  EXPECT_EQ(good.regularity_bound(), Rational(1, 5));
}

TEST(Admissibility, ThetaBWindows) {
  const auto white = check_admissibility(EquationKind::plate, 1, Rational(4), distributed(DistributedKind::white1d));
  EXPECT_EQ(white.theta_B, open_window(Rational(3, 8), Rational(1, 2)));
  EXPECT_TRUE(white.verdict);
  EXPECT_FALSE(check_admissibility(EquationKind::plate, 1, Rational(2), distributed(DistributedKind::white1d)).verdict);
  const auto lr = check_admissibility(EquationKind::plate, 2, Rational(3, 2), distributed(DistributedKind::lr_valued, 6));
  EXPECT_EQ(lr.theta_B, open_window(Rational(1, 6), Rational(1, 2)));
  const auto wave = check_admissibility(EquationKind::wave, 2, Rational(6, 5), distributed(DistributedKind::lr_valued, 6));
  EXPECT_EQ(wave.theta_B, open_window(Rational(1, 3), Rational(1, 2)));
  EXPECT_EQ(wave.theta_B_wide, "(1/3, 1)");
  EXPECT_FALSE(check_admissibility(EquationKind::wave, 2, Rational(6, 5), distributed(DistributedKind::lr_valued, 4)).verdict);
  const auto compact = check_admissibility(EquationKind::plate, 1, Rational(2), distributed(DistributedKind::compact));
  EXPECT_TRUE(compact.theta_B.lo_closed);
  EXPECT_EQ(compact.chosen_theta_B, Rational(0));
  EXPECT_TRUE(compact.verdict);
}

TEST(Admissibility, RejectsInvalidInput) {
  EXPECT_THROW(check_admissibility(EquationKind::plate, 0, Rational(2), point_only()), ConfigError);
  EXPECT_THROW(check_admissibility(EquationKind::plate, 1, Rational(1), point_only()), ConfigError);
}

TEST(Admissibility, ExponentChainSolvableWhenAdmissible) {
  // max theta < alpha - 1/p with alpha = (1/2 + m)/2 and 1/p = (alpha - m)/2, p > 2.
  for (int d = 1; d <= 3; ++d)
    for (const Rational q : {Rational(11, 10), Rational(6, 5), Rational(3, 2), Rational(2), Rational(4)})
      for (auto kind : {EquationKind::plate, EquationKind::wave}) {
        const auto r = check_admissibility(kind, d, q, point_only());
        if (!r.verdict) continue;
        const Rational m = std::max(r.chosen_theta_B, r.chosen_theta_C);
        const Rational alpha = (Rational(1, 2) + m) / 2, inv_p = (alpha - m) / 2;
        EXPECT_LT(alpha, Rational(1, 2));
        EXPECT_LT(inv_p, Rational(1, 2));
        EXPECT_LT(m, alpha - inv_p);
      }
}

TEST(Admissibility, ThetaCWindowMonotoneInQ) {
  Rational prev(1);
  for (const Rational q : {Rational(4), Rational(3), Rational(2), Rational(3, 2), Rational(11, 10), Rational(101, 100)}) {
    const auto r = check_admissibility(EquationKind::plate, 1, q, point_only());
    EXPECT_LE(r.theta_C.lo, prev);
    prev = r.theta_C.lo;
  }
}

TEST(Rationals, ParsingIsExact) {
  EXPECT_EQ(parse_rational("3/10"), Rational(3, 10));
  EXPECT_EQ(parse_rational(" 1.25 "), Rational(5, 4));
  EXPECT_EQ(parse_rational("6e-1"), Rational(3, 5));
  EXPECT_EQ(parse_rational("-2"), Rational(-2));
  EXPECT_EQ(rational_from_double(0.3), Rational(3, 10));
  EXPECT_THROW(parse_rational("1/0"), ConfigError);
  EXPECT_THROW(parse_rational("abc"), ConfigError);
  EXPECT_THROW(parse_rational(""), ConfigError);
}

TEST(Covariance, SummableSequence) {
  const auto t = unit_plate(64);
  NoiseSpec n;
  DistributedChannel ch;
  for (int k = 1; k <= 64; ++k) ch.lambdas.push_back(1.0 / (k * k));
  n.distributed = ch;
  const auto rep = validate_covariance(n, t, SineGrid(t));
  EXPECT_TRUE(rep.summable);
  EXPECT_NEAR(rep.tail_ratio, 0.5, 0.02);
  double oracle = 0.0;
  for (int k = 1; k <= 64; ++k) oracle += 2.0 / (k * k);
  EXPECT_NEAR(rep.partial_sums.back(), oracle, 1e-12);
}

TEST(Covariance, WhiteNoiseProxyDiverges) {
  const auto t = unit_plate(64);
  NoiseSpec n;
  DistributedChannel ch;
  ch.lambdas.assign(64, 1.0);
  n.distributed = ch;
  const auto rep = validate_covariance(n, t, SineGrid(t));
  EXPECT_FALSE(rep.summable);
  EXPECT_NEAR(rep.tail_ratio, 2.0, 1e-12);
}

TEST(Covariance, SingleModeSupNorm) {
  const auto t = unit_plate(8);
  NoiseSpec n;
  DistributedChannel ch;
  ch.lambdas = {1.0};
  n.distributed = ch;
  EXPECT_NEAR(validate_covariance(n, t, SineGrid(t)).sup_square_function, std::sqrt(2.0), 1e-12);
}

TEST(Increments, PointVarianceAndJointMoments) {
  const auto t = unit_plate(4);
  const double dt = 1e-3;
  const IncrementSampler s(point_only(), t, dt, 5, 0);
  const int n = 100000;
  double sw = 0.0, sww = 0.0, swi = 0.0, sii = 0.0;
  for (int j = 0; j < n; ++j) {
    const auto b = s.point(static_cast<std::uint64_t>(j));
    sw += b.dw;
    sww += b.dw * b.dw;
    swi += b.dw * b.dI;
    sii += b.dI * b.dI;
  }
  EXPECT_NEAR(sww / n / dt, 1.0, 0.03);
  EXPECT_NEAR(swi / n / (dt * dt / 2), 1.0, 0.03);
  EXPECT_NEAR(sii / n / (dt * dt * dt / 3), 1.0, 0.03);
  EXPECT_LT(std::abs(sw / n), 3.0 * std::sqrt(dt / n));
}

TEST(Increments, ChannelsIndependentAndZeroLambdaSilent) {
  const auto t = unit_plate(4);
  const double dt = 1e-2;
  NoiseSpec noise = point_only();
  DistributedChannel ch;
  ch.lambdas = {2.0, 0.0, 1.0};
  noise.distributed = ch;
  const IncrementSampler s(noise, t, dt, 8, 2);
  const int n = 100000;
  double cross = 0.0, var0 = 0.0;
  for (int j = 0; j < n; ++j) {
    const auto p = s.point(static_cast<std::uint64_t>(j));
    const auto d0 = s.distributed(0, static_cast<std::uint64_t>(j));
    cross += p.dw * d0.dw;
    var0 += d0.dw * d0.dw;
    const auto d1 = s.distributed(1, static_cast<std::uint64_t>(j));
    ASSERT_EQ(d1.dw, 0.0);
    ASSERT_EQ(d1.dI, 0.0);
    const auto d3 = s.distributed(3, static_cast<std::uint64_t>(j));
    ASSERT_EQ(d3.dw, 0.0);
  }
  EXPECT_NEAR(var0 / n / (2.0 * dt), 1.0, 0.03);
  // Standard error of the mean product is dt sqrt(2) / sqrt(n).
  EXPECT_LT(std::abs(cross / n), 3.0 * dt * std::sqrt(2.0) / std::sqrt(static_cast<double>(n)));
}

TEST(Increments, DeterministicPerSeedAndPath) {
  const auto t = unit_plate(4);
  const IncrementSampler a(point_only(), t, 0.01, 5, 3), b(point_only(), t, 0.01, 5, 3), c(point_only(), t, 0.01, 5, 4);
  EXPECT_EQ(a.point(17).dw, b.point(17).dw);
  EXPECT_EQ(a.point(17).dI, b.point(17).dI);
  EXPECT_NE(a.point(17).dw, c.point(17).dw);
  EXPECT_THROW(IncrementSampler(point_only(), t, 0.0, 5, 3), ConfigError);
}
