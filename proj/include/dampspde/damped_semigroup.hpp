#pragma once
// Per-mode companion matrices A_k = [[0, 1], [-a, -rho sqrt(a)]] of the
// structurally damped operator matrix, their exponentials, resolvents,
// fractional powers and adjoints.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "dampspde/errors.hpp"
#include "dampspde/spectral_domain.hpp"

namespace dampspde {

using cplx = std::complex<double>;

struct ModeMatrix {
  double a = 1.0;
  double rho = 1.0;
  double sqrt_a = 1.0;
  double damping = 1.0;  // rho * sqrt(a)
  cplx lambda_plus, lambda_minus;
  bool jordan = false;

  Eigen::Matrix2d matrix() const {
    Eigen::Matrix2d A;
    A << 0.0, 1.0, -a, -damping;
    return A;
  }
};

inline ModeMatrix mode_matrix(double a, double rho) {
  if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("mode eigenvalue a must be positive");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("damping rho must be positive");
  ModeMatrix m;
  m.a = a;
  m.rho = rho;
  m.sqrt_a = std::sqrt(a);
  m.damping = rho * m.sqrt_a;
  m.jordan = rho == 2.0;
  const double disc = rho * rho - 4.0;
  const cplx root = disc >= 0.0 ? cplx(std::sqrt(disc), 0.0) : cplx(0.0, std::sqrt(-disc));
  m.lambda_plus = 0.5 * m.sqrt_a * (-rho + root);
  m.lambda_minus = 0.5 * m.sqrt_a * (-rho - root);
  if (m.jordan) m.lambda_plus = m.lambda_minus = cplx(-m.sqrt_a, 0.0);
  return m;
}

/// (e^z - 1)/z, accurate near z = 0.
inline cplx phi1(cplx z) {
  if (std::abs(z) < 1e-3) return 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
  return (std::exp(z) - 1.0) / z;
}

/// exp(tA) via the two-eigenvalue interpolation form
/// e^{t l1} I + t e^{t l2} phi1(t (l1 - l2)) (A - l1 I), which reduces
/// to e^{-t sqrt a}(I + t(A + sqrt a I)) in the Jordan case.
inline Eigen::Matrix2d mode_exp(const ModeMatrix& m, double t) {
  if (t < 0.0) throw ConfigError("mode_exp needs t >= 0");
  if (t == 0.0) return Eigen::Matrix2d::Identity();
  const cplx l1 = m.lambda_plus, l2 = m.lambda_minus;
  const cplx e1 = std::exp(t * l1);
  const cplx dd = t * std::exp(t * l2) * phi1(t * (l1 - l2));
  const Eigen::Matrix2d A = m.matrix();
  Eigen::Matrix2d out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const cplx ij = (i == j ? e1 : 0.0) + dd * (A(i, j) - (i == j ? l1 : 0.0));
      out(i, j) = ij.real();
    }
  return out;
}

/// Terms of exp(rA) = sum_i P_i r^{m_i} e^{lambda_i r}; eigen-projectors in
/// the diagonalizable case, (I, N) with N = A + sqrt(a) I in the Jordan case.
struct ExpTerm {
  Eigen::Matrix2cd P;
  int power = 0;
  cplx lambda;
};

inline std::vector<ExpTerm> exp_terms(const ModeMatrix& m) {
  const Eigen::Matrix2cd A = m.matrix().cast<cplx>();
  const Eigen::Matrix2cd I = Eigen::Matrix2cd::Identity();
  if (m.jordan) {
    const cplx l = m.lambda_plus;
    return {{I, 0, l}, {A - l * I, 1, l}};
  }
  const cplx l1 = m.lambda_plus, l2 = m.lambda_minus;
  return {{(A - l2 * I) / (l1 - l2), 0, l1}, {(A - l1 * I) / (l2 - l1), 0, l2}};
}

inline Eigen::Matrix2d adjoint_matrix(const ModeMatrix& m) {
  Eigen::Matrix2d B;
  B << 0.0, -m.a, 1.0, -m.damping;
  return B;
}

/// Explicit inverse [[-rho a^{-1/2}, -a^{-1}], [1, 0]].
inline Eigen::Matrix2d inverse_matrix(const ModeMatrix& m) {
  Eigen::Matrix2d B;
  B << -m.rho / m.sqrt_a, -1.0 / m.a, 1.0, 0.0;
  return B;
}

inline Eigen::Matrix2cd resolvent(const ModeMatrix& m, cplx lambda) {
  // (lambda - A)^{-1} = adj / det, det = lambda^2 + c lambda + a
  const cplx det = lambda * lambda + m.damping * lambda + m.a;
  if (std::abs(det) == 0.0) throw DomainError("resolvent evaluated at an eigenvalue");
  Eigen::Matrix2cd R;
  R << lambda + m.damping, 1.0, -m.a, lambda;
  return R / det;
}

/// Largest singular value of a complex 2x2 matrix.
inline double spectral_norm(const Eigen::Matrix2cd& M) {
  const Eigen::Matrix2cd H = M.adjoint() * M;
  const double tr = (H(0, 0) + H(1, 1)).real();
  const double det = (H(0, 0) * H(1, 1) - H(0, 1) * H(1, 0)).real();
  const double disc = std::max(0.0, tr * tr - 4.0 * det);
  return std::sqrt(0.5 * (tr + std::sqrt(disc)));
}

/// Singular values (max, min) of a real 2x2 matrix.
inline std::pair<double, double> singular_values(const Eigen::Matrix2d& M) {
  const Eigen::Matrix2d H = M.transpose() * M;
  const double tr = H.trace();
  const double det = std::abs(M.determinant());
  const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det * det));
  const double smax = std::sqrt(0.5 * (tr + disc));
  return {smax, smax > 0.0 ? det / smax : 0.0};
}

/// ||lambda (lambda - A_k)^{-1}|| in the X-norm with weights (sqrt a, 1).
inline double weighted_resolvent_norm(const ModeMatrix& m, cplx lambda) {
  Eigen::Matrix2cd R = lambda * resolvent(m, lambda);
  R(0, 1) *= m.sqrt_a;
  R(1, 0) /= m.sqrt_a;
  return spectral_norm(R);
}

/// Principal power M^theta of a real 2x2 matrix whose eigenvalues lie in
/// the open right half plane, via f(M) = f(m1) I + f[m1, m2] (M - m1 I)
/// with a series for the divided difference when m1 ~ m2.
inline Eigen::Matrix2d matrix_power_2x2(const Eigen::Matrix2d& M, double theta) {
  if (theta == 0.0) return Eigen::Matrix2d::Identity();
  const double tr = M.trace(), det = M.determinant();
  const cplx disc = std::sqrt(cplx(0.25 * tr * tr - det, 0.0));
  const cplx m1 = 0.5 * tr + disc, m2 = 0.5 * tr - disc;
  if (!(m1.real() > 0.0 && m2.real() > 0.0)) throw ConfigError("fractional power needs spectrum in the right half plane");
  const cplx f1 = std::pow(m1, theta);
  cplx dd;
  const cplx r = m1 / m2 - 1.0;
  if (std::abs(r) < 1e-4) {
    dd = std::pow(m2, theta - 1.0) * theta *
         (1.0 + (theta - 1.0) * r / 2.0 + (theta - 1.0) * (theta - 2.0) * r * r / 6.0);
  } else {
    dd = (f1 - std::pow(m2, theta)) / (m1 - m2);
  }
  Eigen::Matrix2d out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out(i, j) = ((i == j ? f1 : 0.0) + dd * (M(i, j) - (i == j ? m1 : 0.0))).real();
  return out;
}

inline Eigen::Matrix2d fractional_power_matrix(const ModeMatrix& m, double w, double theta) {
  if (std::abs(theta) > 1.0) throw ConfigError("fractional power needs theta in [-1, 1]");
  if (!(w > m.lambda_plus.real())) throw ConfigError("shift w must lie to the right of the spectrum");
  return matrix_power_2x2(w * Eigen::Matrix2d::Identity() - m.matrix(), theta);
}

inline Eigen::Vector2d fractional_power_apply(const ModeMatrix& m, double w, double theta, const Eigen::Vector2d& v) {
  return fractional_power_matrix(m, w, theta) * v;
}

// ---------------------------------------------------------------------------
// Sector scan

struct SectorPoint {
  double mu;
  cplx lambda;
  double norm;
};

struct SectorReport {
  double phi = 0.0;
  double rho = 0.0;
  int cutoff = 0;
  std::vector<double> radii;
  double sup_norm = 0.0;         // sup over both rays and all radii of max over modes
  double far_field_norm = 0.0;   // value at the largest radius (rays and positive axis)
  std::vector<double> ray_max;   // per radius, max over modes and both rays
  std::vector<SectorPoint> argmax;  // maximizing mode per radius
  int skipped = 0;
};

/// 24 log-spaced radii per decade over [1e-3 sqrt(a_min), 1e3 a_max].
inline std::vector<double> default_radii(const SpectralTruncation& t, int per_decade = 24) {
  double amin = t.modes.front().a, amax = t.modes.front().a;
  for (const auto& m : t.modes) {
    amin = std::min(amin, m.a);
    amax = std::max(amax, m.a);
  }
  const double lo = std::log10(1e-3 * std::sqrt(amin)), hi = std::log10(1e3 * amax);
  const int n = static_cast<int>(std::ceil((hi - lo) * per_decade));
  std::vector<double> r(n + 1);
  for (int i = 0; i <= n; ++i) r[i] = std::pow(10.0, lo + (hi - lo) * i / n);
  return r;
}

inline SectorReport resolvent_scan(const SpectralTruncation& t, double rho, double phi,
                                   const std::vector<double>& radii) {
  if (!(phi > 0.0 && phi < std::numbers::pi / 2)) throw ConfigError("sector angle phi must lie in (0, pi/2)");
  if (radii.empty()) throw ConfigError("resolvent scan needs radii");
  const double span = std::log10(*std::max_element(radii.begin(), radii.end()) /
                                 *std::min_element(radii.begin(), radii.end()));
  if (span < 6.0 - 1e-9) throw ConfigError("resolvent scan radii must span at least 6 decades");
  SectorReport rep;
  rep.phi = phi;
  rep.rho = rho;
  rep.cutoff = t.cutoff;
  rep.radii = radii;
  std::vector<ModeMatrix> mm;
  mm.reserve(t.size());
  for (const auto& m : t.modes) mm.push_back(mode_matrix(m.a, rho));
  const double ang = std::numbers::pi - phi;
  for (double r : radii) {
    double best = 0.0;
    SectorPoint arg{};
    for (int sgn : {1, -1}) {
      const cplx lam = std::polar(r, sgn * ang);
      for (std::size_t k = 0; k < mm.size(); ++k) {
        const cplx det = lam * lam + mm[k].damping * lam + mm[k].a;
        if (std::abs(det) <= 1e-300) {
          ++rep.skipped;
          continue;
        }
        const double v = weighted_resolvent_norm(mm[k], lam);
        if (v > best) {
          best = v;
          arg = {t.modes[k].mu, lam, v};
        }
      }
    }
    rep.ray_max.push_back(best);
    rep.argmax.push_back(arg);
    rep.sup_norm = std::max(rep.sup_norm, best);
  }
  const double rmax = *std::max_element(radii.begin(), radii.end());
  double far = 0.0;
  for (cplx lam : {std::polar(rmax, ang), std::polar(rmax, -ang), cplx(rmax, 0.0)})
    for (const auto& m : mm) far = std::max(far, weighted_resolvent_norm(m, lam));
  rep.far_field_norm = far;
  return rep;
}

// ---------------------------------------------------------------------------
// Scale identification

struct ScaleReport {
  double theta = 0.0;
  double rho = 0.0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double spread() const { return max_ratio / min_ratio; }
};

/// Ratio matrix W_X (w - A)^theta W_theta^{-1} with W_X = diag(sqrt a, 1) and
/// W_theta = diag(a^{(1+theta)/2}, a^{theta/2}). In X-weighted coordinates
/// A_k becomes sqrt(a) J with J = [[0, 1], [-1, -rho]], and the ratio matrix
/// reduces to (w a^{-1/2} - J)^theta; extreme ratios over all vectors are
/// its singular values.
inline Eigen::Matrix2d scale_ratio_matrix(double a, double rho, double theta, double w) {
  Eigen::Matrix2d J;
  J << 0.0, 1.0, -1.0, -rho;
  return matrix_power_2x2((w / std::sqrt(a)) * Eigen::Matrix2d::Identity() - J, theta);
}

/// Sweep of mode eigenvalues `a_values`; reports the extreme equivalence
/// ratios between ||(w-A_k)^theta v||_X and the X_theta weighted norm.
inline ScaleReport scale_identification_check(const std::vector<double>& a_values, double rho, double theta, double w) {
  if (theta < 0.0 || theta > 0.5) throw ConfigError("scale identification needs theta in [0, 1/2]");
  if (!(w > 0.0)) throw ConfigError("shift w must be positive");
  ScaleReport rep;
  rep.theta = theta;
  rep.rho = rho;
  rep.min_ratio = INFINITY;
  rep.max_ratio = 0.0;
  for (double a : a_values) {
    const auto [smax, smin] = singular_values(scale_ratio_matrix(a, rho, theta, w));
    rep.max_ratio = std::max(rep.max_ratio, smax);
    rep.min_ratio = std::min(rep.min_ratio, smin);
  }
  return rep;
}

/// Log-spaced plate modes with mu in [mu_lo, mu_hi] (a = mu^2).
inline std::vector<double> plate_a_sweep(double mu_lo, double mu_hi, int per_decade = 16) {
  std::vector<double> out;
  const double lo = std::log10(mu_lo), hi = std::log10(mu_hi);
  const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) * per_decade)));
  for (int i = 0; i <= n; ++i) {
    const double mu = std::pow(10.0, lo + (hi - lo) * i / n);
    out.push_back(mu * mu);
  }
  return out;
}

}  // namespace dampspde
