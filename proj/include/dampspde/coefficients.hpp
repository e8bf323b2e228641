#pragma once
// Nemytskii coefficients f, b and scalar functionals G, C, evaluated
// pseudo-spectrally on a sine grid. Maps are picked by name from a small
// catalogue, each carrying a declared Lipschitz constant.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dampspde/errors.hpp"
#include "dampspde/spectral_domain.hpp"

namespace dampspde {

struct CoefficientSpec {
  std::string name = "zero";
  std::map<std::string, double> params;
  std::vector<double> poly;  // clipped_poly coefficients c0..c3

  double param(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
  bool operator==(const CoefficientSpec&) const = default;
};

/// phi(t, s, u, v) with |phi(x, xd) - phi(y, yd)| <= L (|x - y| + |xd - yd|).
struct NemytskiiMap {
  std::function<double(double, double, double)> fn;  // (t, u, v)
  double lipschitz = 0.0;
  double growth = 0.0;
  bool is_zero = false;
  bool state_independent = false;
  std::string name = "zero";
};

/// Functional of the grid realizations of (u, v); Lipschitz against
/// ||u1 - u2||_{L^2} + ||v1 - v2||_{L^2}.
struct ScalarFunctional {
  std::function<double(double, const Eigen::VectorXd&, const Eigen::VectorXd&, double)> fn;  // (t, u, v, cell)
  double lipschitz = 0.0;
  bool is_zero = false;
  bool state_independent = false;
  std::string name = "zero";
};

/// max |p'| on [-R, R] for p of degree <= 3.
inline double cubic_derivative_bound(const std::vector<double>& c, double R) {
  auto dp = [&](double x) {
    double v = 0.0;
    for (std::size_t i = 1; i < c.size(); ++i) v += static_cast<double>(i) * c[i] * std::pow(x, static_cast<double>(i - 1));
    return std::abs(v);
  };
  double m = std::max(dp(-R), dp(R));
  if (c.size() == 4 && c[3] != 0.0) {
    const double x = -c[2] / (3.0 * c[3]);
    if (std::abs(x) <= R) m = std::max(m, dp(x));
  }
  return m;
}

inline NemytskiiMap make_nemytskii(const CoefficientSpec& spec) {
  NemytskiiMap m;
  m.name = spec.name;
  if (spec.name == "zero") {
    m.fn = [](double, double, double) { return 0.0; };
    m.is_zero = m.state_independent = true;
  } else if (spec.name == "constant") {
    const double c = spec.param("value", 1.0);
    m.fn = [c](double, double, double) { return c; };
    m.growth = std::abs(c);
    m.state_independent = true;
  } else if (spec.name == "linear") {
    const double au = spec.param("u", 0.0), av = spec.param("v", 0.0), c = spec.param("c", 0.0);
    m.fn = [=](double, double u, double v) { return au * u + av * v + c; };
    m.lipschitz = std::max(std::abs(au), std::abs(av));
    m.growth = std::max({std::abs(au), std::abs(av), std::abs(c)});
    m.state_independent = au == 0.0 && av == 0.0;
  } else if (spec.name == "sin") {
    const double amp = spec.param("amplitude", 1.0), w = spec.param("frequency", 1.0);
    m.fn = [=](double, double u, double) { return amp * std::sin(w * u); };
    m.lipschitz = std::abs(amp * w);
    m.growth = std::abs(amp);
  } else if (spec.name == "clipped_poly") {
    if (spec.poly.empty() || spec.poly.size() > 4) throw ConfigError("clipped_poly needs 1 to 4 coefficients");
    const double R = spec.param("clip", 1.0);
    if (!(R > 0.0)) throw ConfigError("clipped_poly needs clip > 0");
    const auto c = spec.poly;
    m.fn = [c, R](double, double u, double) {
      const double x = std::clamp(u, -R, R);
      double v = 0.0, p = 1.0;
      for (double ci : c) {
        v += ci * p;
        p *= x;
      }
      return v;
    };
    m.lipschitz = cubic_derivative_bound(c, R);
    m.growth = std::abs(m.fn(0.0, R, 0.0)) + std::abs(m.fn(0.0, -R, 0.0));
  } else {
    throw ConfigError("unknown coefficient map '" + spec.name + "'");
  }
  return m;
}

inline ScalarFunctional make_functional(const CoefficientSpec& spec, double domain_volume) {
  ScalarFunctional g;
  g.name = spec.name;
  if (spec.name == "zero") {
    g.fn = [](double, const Eigen::VectorXd&, const Eigen::VectorXd&, double) { return 0.0; };
    g.is_zero = g.state_independent = true;
  } else if (spec.name == "constant") {
    const double c = spec.param("value", 1.0);
    g.fn = [c](double, const Eigen::VectorXd&, const Eigen::VectorXd&, double) { return c; };
    g.state_independent = true;
  } else if (spec.name == "integral_sin") {
    // C(x) = amplitude * int sin(frequency * x(s)) ds
    const double amp = spec.param("amplitude", 1.0), w = spec.param("frequency", 1.0);
    g.fn = [=](double, const Eigen::VectorXd& u, const Eigen::VectorXd&, double cell) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < u.size(); ++j) s += std::sin(w * u[j]);
      return amp * cell * s;
    };
    g.lipschitz = std::abs(amp * w) * std::sqrt(domain_volume);
  } else if (spec.name == "integral_identity") {
    const double amp = spec.param("amplitude", 1.0);
    g.fn = [=](double, const Eigen::VectorXd& u, const Eigen::VectorXd&, double cell) { return amp * cell * u.sum(); };
    g.lipschitz = std::abs(amp) * std::sqrt(domain_volume);
  } else {
    throw ConfigError("unknown scalar functional '" + spec.name + "'");
  }
  return g;
}

/// Grid used for products: twice the minimum resolution.
inline SineGrid dealiased_grid(const SpectralTruncation& t) { return SineGrid(t, 2 * (2 * t.cutoff + 1) - 1); }

/// Coefficients of f(t, s, u(s), v(s)) on the retained modes.
inline Eigen::VectorXd apply_nemytskii(const NemytskiiMap& map, double t, const Eigen::VectorXd& u,
                                       const Eigen::VectorXd& v, const SineGrid& grid) {
  if (map.is_zero) return Eigen::VectorXd::Zero(u.size());
  const Eigen::VectorXd ug = grid.synthesize(u), vg = grid.synthesize(v);
  Eigen::VectorXd out(ug.size());
  for (Eigen::Index j = 0; j < ug.size(); ++j) {
    out[j] = map.fn(t, ug[j], vg[j]);
    if (!std::isfinite(out[j])) throw NumericalError("non-finite Nemytskii value at grid point " + std::to_string(j));
  }
  return grid.analyse(out);
}

/// Same, but with the pointwise values returned on the grid.
inline Eigen::VectorXd nemytskii_on_grid(const NemytskiiMap& map, double t, const Eigen::VectorXd& ug,
                                         const Eigen::VectorXd& vg) {
  Eigen::VectorXd out(ug.size());
  for (Eigen::Index j = 0; j < ug.size(); ++j) out[j] = map.fn(t, ug[j], vg[j]);
  return out;
}

inline double apply_functional(const ScalarFunctional& fun, double t, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& v, const SineGrid& grid) {
  if (fun.is_zero) return 0.0;
  const double val = fun.fn(t, grid.synthesize(u), grid.synthesize(v), grid.cell_volume());
  if (!std::isfinite(val)) throw NumericalError("non-finite functional value");
  return val;
}

}  // namespace dampspde
