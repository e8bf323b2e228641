#pragma once
// Dirichlet Laplacian eigenstructure on boxes, sine transforms on a
// midpoint grid, fractional norms, and point-mass coefficients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dampspde/errors.hpp"

namespace dampspde {

enum class EquationKind { plate, wave };

inline const char* to_string(EquationKind k) { return k == EquationKind::plate ? "plate" : "wave"; }

struct BoxDomain {
  int d = 1;
  std::vector<double> lengths{1.0};
  int grid_points_per_axis = 0;  // 0: choose the minimum admissible value

  double volume() const {
    double v = 1.0;
    for (double l : lengths) v *= l;
    return v;
  }

  void validate() const {
    if (d < 1) throw ConfigError("domain dimension must be >= 1");
    if (static_cast<int>(lengths.size()) != d) throw ConfigError("domain needs exactly d side lengths");
    for (double l : lengths)
      if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("domain side lengths must be positive");
    if (grid_points_per_axis < 0) throw ConfigError("grid_points_per_axis must be nonnegative");
  }
  bool operator==(const BoxDomain&) const = default;
};

struct Mode {
  std::vector<int> index;
  double mu = 0.0;  // eigenvalue of the negative Dirichlet Laplacian
  double a = 0.0;   // eigenvalue of the elastic operator: mu^2 (plate) or mu (wave)
};

struct SpectralTruncation {
  EquationKind kind = EquationKind::plate;
  BoxDomain domain;
  int cutoff = 1;
  double w_shift = 1.0;
  std::vector<Mode> modes;  // sorted by mu ascending

  std::size_t size() const { return modes.size(); }
  int max_index() const { return cutoff; }
};

inline double laplacian_eigenvalue(const BoxDomain& dom, const std::vector<int>& n) {
  double mu = 0.0;
  for (int i = 0; i < dom.d; ++i) {
    const double k = std::numbers::pi * n[i] / dom.lengths[i];
    mu += k * k;
  }
  return mu;
}

inline SpectralTruncation enumerate_modes(const BoxDomain& dom, EquationKind kind, int cutoff,
                                          double w_shift = 1.0) {
  dom.validate();
  if (cutoff < 1) throw ConfigError("truncation cutoff must be >= 1");
  if (!(w_shift > 0.0)) throw ConfigError("w_shift must be positive");
  SpectralTruncation t;
  t.kind = kind;
  t.domain = dom;
  t.cutoff = cutoff;
  t.w_shift = w_shift;

  std::vector<int> n(dom.d, 1);
  while (true) {
    Mode m;
    m.index = n;
    m.mu = laplacian_eigenvalue(dom, n);
    m.a = kind == EquationKind::plate ? m.mu * m.mu : m.mu;
    t.modes.push_back(std::move(m));
    int ax = 0;
    while (ax < dom.d && n[ax] == cutoff) n[ax++] = 1;
    if (ax == dom.d) break;
    ++n[ax];
  }
  std::stable_sort(t.modes.begin(), t.modes.end(), [](const Mode& x, const Mode& y) {
    if (x.mu != y.mu) return x.mu < y.mu;
    return x.index < y.index;
  });
  return t;
}

/// e_n(s) = prod_i sqrt(2/L_i) sin(n_i pi s_i / L_i)
inline double eigenfunction(const BoxDomain& dom, const std::vector<int>& n, const std::vector<double>& s) {
  double v = 1.0;
  for (int i = 0; i < dom.d; ++i)
    v *= std::sqrt(2.0 / dom.lengths[i]) * std::sin(n[i] * std::numbers::pi * s[i] / dom.lengths[i]);
  return v;
}

inline bool strictly_inside(const BoxDomain& dom, const std::vector<double>& s) {
  if (static_cast<int>(s.size()) != dom.d) return false;
  for (int i = 0; i < dom.d; ++i)
    if (!(s[i] > 0.0 && s[i] < dom.lengths[i])) return false;
  return true;
}

/// Coefficients <delta_{s0}, e_k> = e_k(s0) for every retained mode.
inline Eigen::VectorXd point_mass_coefficients(const SpectralTruncation& t, const std::vector<double>& s0) {
  if (!strictly_inside(t.domain, s0)) throw DomainError("point mass location must lie strictly inside the box");
  Eigen::VectorXd c(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) c[k] = eigenfunction(t.domain, t.modes[k].index, s0);
  return c;
}

/// Default interior point with irrational coordinates: s0_i = (sqrt(2)-1) L_i.
inline std::vector<double> default_point(const BoxDomain& dom) {
  std::vector<double> s(dom.d);
  for (int i = 0; i < dom.d; ++i) s[i] = (std::numbers::sqrt2 - 1.0) * dom.lengths[i];
  return s;
}

/// Uniform midpoint grid carrying the sampled eigenbasis. For M points per
/// axis the discrete sine system is orthogonal for indices 1..M-1, so
/// analyse(synthesize(c)) = c for every retained mode once M > cutoff; the
/// stricter M >= 2 cutoff + 1 is enforced so products of two band-limited
/// fields are also resolved.
class SineGrid {
 public:
  SineGrid(const SpectralTruncation& t, int points_per_axis = 0) : d_(t.domain.d) {
    const int minimum = 2 * t.cutoff + 1;
    m_ = points_per_axis > 0 ? points_per_axis
                             : (t.domain.grid_points_per_axis > 0 ? t.domain.grid_points_per_axis : minimum);
    if (m_ < minimum) throw ConfigError("grid under-resolves the truncation: need >= 2*cutoff+1 points per axis");
    double total = 1.0;
    for (int i = 0; i < d_; ++i) total *= m_;
    if (total * static_cast<double>(t.size()) > 6.0e7) throw ConfigError("grid basis too large for dense transforms");
    n_points_ = static_cast<std::size_t>(total);
    cell_ = 1.0;
    for (int i = 0; i < d_; ++i) cell_ *= t.domain.lengths[i] / m_;

    points_.resize(n_points_, std::vector<double>(d_));
    for (std::size_t j = 0; j < n_points_; ++j) {
      std::size_t r = j;
      for (int i = 0; i < d_; ++i) {
        const std::size_t ji = r % static_cast<std::size_t>(m_);
        r /= static_cast<std::size_t>(m_);
        points_[j][i] = (static_cast<double>(ji) + 0.5) * t.domain.lengths[i] / m_;
      }
    }
    basis_.resize(static_cast<Eigen::Index>(n_points_), static_cast<Eigen::Index>(t.size()));
    for (std::size_t k = 0; k < t.size(); ++k)
      for (std::size_t j = 0; j < n_points_; ++j)
        basis_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
            eigenfunction(t.domain, t.modes[k].index, points_[j]);
  }

  Eigen::VectorXd synthesize(const Eigen::VectorXd& coeffs) const {
    if (coeffs.size() != basis_.cols()) throw ConfigError("coefficient length does not match truncation");
    return basis_ * coeffs;
  }

  Eigen::VectorXd analyse(const Eigen::VectorXd& values) const {
    if (values.size() != basis_.rows()) throw ConfigError("grid vector length does not match grid");
    return cell_ * (basis_.transpose() * values);
  }

  /// Midpoint-rule L^q norm of grid values.
  double lq_norm(const Eigen::VectorXd& values, double q) const {
    if (!(q >= 1.0)) throw ConfigError("integrability exponent must be >= 1");
    double s = 0.0;
    for (Eigen::Index j = 0; j < values.size(); ++j) s += std::pow(std::abs(values[j]), q);
    return std::pow(cell_ * s, 1.0 / q);
  }

  double sup_norm(const Eigen::VectorXd& values) const { return values.cwiseAbs().maxCoeff(); }

  std::size_t size() const { return n_points_; }
  int points_per_axis() const { return m_; }
  double cell_volume() const { return cell_; }
  const std::vector<std::vector<double>>& points() const { return points_; }
  const Eigen::MatrixXd& basis() const { return basis_; }

 private:
  int d_;
  int m_;
  std::size_t n_points_ = 0;
  double cell_ = 1.0;
  std::vector<std::vector<double>> points_;
  Eigen::MatrixXd basis_;
};

struct FractionalNormSpec {
  double theta = 0.0;
  double q = 2.0;
};

/// Per-mode weights a_k^theta of A^theta.
inline Eigen::VectorXd fractional_weights(const SpectralTruncation& t, double theta) {
  Eigen::VectorXd w(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) w[k] = std::pow(t.modes[k].a, theta);
  return w;
}

/// ||A^theta x||_{L^q}: weighted Parseval for q = 2, grid quadrature otherwise.
inline double fractional_norm(const Eigen::VectorXd& coeffs, const FractionalNormSpec& spec,
                              const SpectralTruncation& t, const SineGrid* grid = nullptr) {
  if (!(spec.q > 1.0)) throw ConfigError("fractional norm needs q > 1");
  if (std::abs(spec.theta) > 1.0) throw ConfigError("fractional norm needs |theta| <= 1");
  if (static_cast<std::size_t>(coeffs.size()) != t.size()) throw ConfigError("coefficient length does not match truncation");
  const Eigen::VectorXd weighted = coeffs.cwiseProduct(fractional_weights(t, spec.theta));
  if (spec.q == 2.0) return weighted.norm();
  if (grid) return grid->lq_norm(grid->synthesize(weighted), spec.q);
  SineGrid g(t, 4 * t.cutoff + 1);
  return g.lq_norm(g.synthesize(weighted), spec.q);
}

}  // namespace dampspde
