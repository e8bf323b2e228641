#pragma once
// Scenario files: TOML schema (version 1), canonical serialization, content
// digest, and conversion to a SimulationSetup.
//
// Layout:
//   schema_version = 1
//   name = "..."
//   [equation]     kind, rho, q, cutoff, w_shift
//   [domain]       lengths, grid_points_per_axis
//   [noise.point]  s0
//   [noise.distributed]  kind = compact|white|lr, lambdas, basis, r
//   [theta]        theta_B, theta_C (optional overrides)
//   [coefficients.f|b|G|C]  name, poly, other numeric keys as parameters
//   [initial]      profile = zero|coefficients|mode1, u0, v0, amplitude, eta
//   [time]         T, dt, output_every
//   [output]       fractional_thetas, raw, persist_modes, persist_paths
//   [run]          paths, seed

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <toml.hpp>

#include "dampspde/coefficients.hpp"
#include "dampspde/errors.hpp"
#include "dampspde/integrator.hpp"
#include "dampspde/noise_model.hpp"
#include "dampspde/spectral_domain.hpp"

namespace dampspde {

inline constexpr int kSchemaVersion = 1;

struct InitialData {
  std::string profile = "zero";
  std::vector<double> u0, v0;  // by position in the truncation; missing entries are zero
  double amplitude = 1.0;
  Rational eta{1, 2};
  bool operator==(const InitialData&) const = default;
};

struct OutputSpec {
  std::uint64_t every = 1;  // output spacing in steps
  std::vector<double> fractional_thetas;
  bool raw = false;  // include coefficient vectors in trajectory records
  int persist_modes = 20;
  int persist_paths = 4;
  bool operator==(const OutputSpec&) const = default;
};

struct Scenario {
  int schema_version = kSchemaVersion;
  std::string name;
  EquationKind kind = EquationKind::plate;
  BoxDomain domain;
  int cutoff = 64;
  double w_shift = 1.0;
  double rho = 1.0;
  Rational q{2};
  NoiseSpec noise;
  ThetaOverrides theta;
  CoefficientSpec f, b, G, C;
  InitialData initial;
  double T = 1.0;
  double dt = 1.0 / 1024;
  OutputSpec output;
  int paths = 1;
  std::uint64_t seed = 0;
  bool operator==(const Scenario&) const = default;
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::string where(const toml::source_region& r) {
  return r.begin.line ? "line " + std::to_string(r.begin.line) : "unknown line";
}

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string& field, const toml::source_region& r, const std::string& msg) const {
    throw ConfigError(origin_ + ":" + std::to_string(r.begin.line) + ": field '" + field + "': " + msg);
  }

  const toml::table* table(const toml::table& parent, const std::string& key, const std::string& path,
                           bool required) const {
    const toml::node* n = parent.get(key);
    if (!n) {
      if (required) fail(path, parent.source(), "missing required table (" + where(parent.source()) + ")");
      return nullptr;
    }
    if (!n->is_table()) fail(path, n->source(), "expected a table");
    return n->as_table();
  }

  const toml::node* node(const toml::table& t, const std::string& key, const std::string& path, bool required) const {
    const toml::node* n = t.get(key);
    if (!n && required) fail(path, t.source(), "missing required field (in table at " + where(t.source()) + ")");
    return n;
  }

  double number(const toml::node& n, const std::string& path) const {
    if (auto v = n.value<double>()) return *v;
    if (auto s = n.value<std::string>()) {
      try {
        return to_double(parse_rational(*s));
      } catch (const std::exception& e) {
        fail(path, n.source(), e.what());
      }
    }
    fail(path, n.source(), "expected a number or a rational string");
  }

  double number(const toml::table& t, const std::string& key, const std::string& path, std::optional<double> dflt) const {
    const toml::node* n = node(t, key, path, !dflt.has_value());
    return n ? number(*n, path) : *dflt;
  }

  Rational rational(const toml::node& n, const std::string& path) const {
    try {
      if (auto s = n.value<std::string>()) return parse_rational(*s);
      if (auto i = n.value_exact<std::int64_t>()) return Rational(*i);
      if (auto d = n.value<double>()) return rational_from_double(*d);
    } catch (const std::exception& e) {
      fail(path, n.source(), e.what());
    }
    fail(path, n.source(), "expected a rational (\"p/q\", decimal string or number)");
  }

  std::int64_t integer(const toml::table& t, const std::string& key, const std::string& path,
                       std::optional<std::int64_t> dflt) const {
    const toml::node* n = node(t, key, path, !dflt.has_value());
    if (!n) return *dflt;
    if (auto v = n->value_exact<std::int64_t>()) return *v;
    fail(path, n->source(), "expected an integer");
  }

  bool boolean(const toml::table& t, const std::string& key, const std::string& path, bool dflt) const {
    const toml::node* n = node(t, key, path, false);
    if (!n) return dflt;
    if (auto v = n->value_exact<bool>()) return *v;
    fail(path, n->source(), "expected a boolean");
  }

  std::string string(const toml::table& t, const std::string& key, const std::string& path,
                     std::optional<std::string> dflt) const {
    const toml::node* n = node(t, key, path, !dflt.has_value());
    if (!n) return *dflt;
    if (auto v = n->value_exact<std::string>()) return *v;
    fail(path, n->source(), "expected a string");
  }

  std::vector<double> numbers(const toml::table& t, const std::string& key, const std::string& path,
                              bool required) const {
    const toml::node* n = node(t, key, path, required);
    std::vector<double> out;
    if (!n) return out;
    const toml::array* a = n->as_array();
    if (!a) fail(path, n->source(), "expected an array of numbers");
    for (const auto& e : *a) out.push_back(number(e, path));
    return out;
  }

  std::vector<int> integers(const toml::table& t, const std::string& key, const std::string& path) const {
    const toml::node* n = node(t, key, path, false);
    std::vector<int> out;
    if (!n) return out;
    const toml::array* a = n->as_array();
    if (!a) fail(path, n->source(), "expected an array of integers");
    for (const auto& e : *a) {
      auto v = e.value_exact<std::int64_t>();
      if (!v) fail(path, e.source(), "expected an integer");
      out.push_back(static_cast<int>(*v));
    }
    return out;
  }

  CoefficientSpec coefficient(const toml::table* t, const std::string& path) const {
    CoefficientSpec c;
    if (!t) return c;
    for (const auto& [k, v] : *t) {
      const std::string key(k.str());
      if (key == "name") {
        auto s = v.value_exact<std::string>();
        if (!s) fail(path + ".name", v.source(), "expected a string");
        c.name = *s;
      } else if (key == "poly") {
        c.poly = numbers(*t, "poly", path + ".poly", true);
      } else {
        c.params[key] = number(v, path + "." + key);
      }
    }
    return c;
  }

 private:
  std::string origin_;
};

}  // namespace detail

inline Scenario scenario_from_table(const toml::table& root, const std::string& origin) {
  detail::Reader rd(origin);
  Scenario s;
  s.schema_version = static_cast<int>(rd.integer(root, "schema_version", "schema_version", std::nullopt));
  if (s.schema_version != kSchemaVersion)
    rd.fail("schema_version", root.get("schema_version")->source(),
            "unsupported schema version " + std::to_string(s.schema_version) + " (expected 1)");
  s.name = rd.string(root, "name", "name", "");

  const toml::table* eq = rd.table(root, "equation", "equation", true);
  const std::string kind = rd.string(*eq, "kind", "equation.kind", std::nullopt);
  if (kind == "plate") s.kind = EquationKind::plate;
  else if (kind == "wave") s.kind = EquationKind::wave;
  else rd.fail("equation.kind", eq->get("kind")->source(), "expected \"plate\" or \"wave\"");
  s.rho = rd.number(*eq, "rho", "equation.rho", std::nullopt);
  s.q = rd.rational(*rd.node(*eq, "q", "equation.q", true), "equation.q");
  s.cutoff = static_cast<int>(rd.integer(*eq, "cutoff", "equation.cutoff", std::nullopt));
  s.w_shift = rd.number(*eq, "w_shift", "equation.w_shift", 1.0);

  const toml::table* dom = rd.table(root, "domain", "domain", true);
  s.domain.lengths = rd.numbers(*dom, "lengths", "domain.lengths", true);
  s.domain.d = static_cast<int>(s.domain.lengths.size());
  s.domain.grid_points_per_axis =
      static_cast<int>(rd.integer(*dom, "grid_points_per_axis", "domain.grid_points_per_axis", 0));

  if (const toml::table* noise = rd.table(root, "noise", "noise", false)) {
    if (const toml::table* pt = rd.table(*noise, "point", "noise.point", false))
      s.noise.point = PointChannel{rd.numbers(*pt, "s0", "noise.point.s0", true)};
    if (const toml::table* ds = rd.table(*noise, "distributed", "noise.distributed", false)) {
      DistributedChannel ch;
      const std::string k = rd.string(*ds, "kind", "noise.distributed.kind", std::nullopt);
      if (k == "compact") ch.kind = DistributedKind::compact;
      else if (k == "white") ch.kind = DistributedKind::white1d;
      else if (k == "lr") ch.kind = DistributedKind::lr_valued;
      else rd.fail("noise.distributed.kind", ds->get("kind")->source(), "expected compact, white or lr");
      ch.lambdas = rd.numbers(*ds, "lambdas", "noise.distributed.lambdas", false);
      ch.basis = rd.integers(*ds, "basis", "noise.distributed.basis");
      if (const toml::node* r = rd.node(*ds, "r", "noise.distributed.r", ch.kind == DistributedKind::lr_valued))
        ch.r = rd.rational(*r, "noise.distributed.r");
      s.noise.distributed = ch;
    }
  }
  if (const toml::table* th = rd.table(root, "theta", "theta", false)) {
    if (const toml::node* n = th->get("theta_B")) s.theta.theta_B = rd.rational(*n, "theta.theta_B");
    if (const toml::node* n = th->get("theta_C")) s.theta.theta_C = rd.rational(*n, "theta.theta_C");
  }
  if (const toml::table* co = rd.table(root, "coefficients", "coefficients", false)) {
    s.f = rd.coefficient(rd.table(*co, "f", "coefficients.f", false), "coefficients.f");
    s.b = rd.coefficient(rd.table(*co, "b", "coefficients.b", false), "coefficients.b");
    s.G = rd.coefficient(rd.table(*co, "G", "coefficients.G", false), "coefficients.G");
    s.C = rd.coefficient(rd.table(*co, "C", "coefficients.C", false), "coefficients.C");
  }
  if (const toml::table* in = rd.table(root, "initial", "initial", false)) {
    s.initial.profile = rd.string(*in, "profile", "initial.profile", "zero");
    s.initial.u0 = rd.numbers(*in, "u0", "initial.u0", false);
    s.initial.v0 = rd.numbers(*in, "v0", "initial.v0", false);
    s.initial.amplitude = rd.number(*in, "amplitude", "initial.amplitude", 1.0);
    if (const toml::node* n = in->get("eta")) s.initial.eta = rd.rational(*n, "initial.eta");
  }
  const toml::table* tm = rd.table(root, "time", "time", true);
  s.T = rd.number(*tm, "T", "time.T", std::nullopt);
  s.dt = rd.number(*tm, "dt", "time.dt", std::nullopt);
  s.output.every = static_cast<std::uint64_t>(rd.integer(*tm, "output_every", "time.output_every", 1));
  if (const toml::table* out = rd.table(root, "output", "output", false)) {
    s.output.fractional_thetas = rd.numbers(*out, "fractional_thetas", "output.fractional_thetas", false);
    s.output.raw = rd.boolean(*out, "raw", "output.raw", false);
    s.output.persist_modes = static_cast<int>(rd.integer(*out, "persist_modes", "output.persist_modes", 20));
    s.output.persist_paths = static_cast<int>(rd.integer(*out, "persist_paths", "output.persist_paths", 4));
  }
  if (const toml::table* run = rd.table(root, "run", "run", false)) {
    s.paths = static_cast<int>(rd.integer(*run, "paths", "run.paths", 1));
    s.seed = static_cast<std::uint64_t>(rd.integer(*run, "seed", "run.seed", 0));
  }
  return s;
}

inline Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>") {
  try {
    return scenario_from_table(toml::parse(text, origin), origin);
  } catch (const toml::parse_error& e) {
    throw ConfigError(origin + ":" + std::to_string(e.source().begin.line) + ": " + std::string(e.description()));
  }
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Canonical serialization

/// Shortest round-trip decimal, always with a fractional part or exponent.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

namespace detail {

inline std::string quote(const std::string& s) {
  std::string o = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') o += '\\';
    o += c;
  }
  return o + "\"";
}

inline std::string list(const std::vector<double>& v) {
  std::string o = "[";
  for (std::size_t i = 0; i < v.size(); ++i) o += (i ? ", " : "") + format_double(v[i]);
  return o + "]";
}

inline std::string list(const std::vector<int>& v) {
  std::string o = "[";
  for (std::size_t i = 0; i < v.size(); ++i) o += (i ? ", " : "") + std::to_string(v[i]);
  return o + "]";
}

inline void coefficient(std::ostringstream& o, const char* key, const CoefficientSpec& c) {
  o << "\n[coefficients." << key << "]\nname = " << quote(c.name) << "\n";
  if (!c.poly.empty()) o << "poly = " << list(c.poly) << "\n";
  for (const auto& [k, v] : c.params) o << k << " = " << format_double(v) << "\n";
}

}  // namespace detail

inline std::string serialize_scenario(const Scenario& s) {
  using detail::list;
  using detail::quote;
  std::ostringstream o;
  o << "schema_version = " << s.schema_version << "\n";
  o << "name = " << quote(s.name) << "\n";
  o << "\n[equation]\nkind = " << quote(to_string(s.kind)) << "\nrho = " << format_double(s.rho)
    << "\nq = " << quote(to_string(s.q)) << "\ncutoff = " << s.cutoff << "\nw_shift = " << format_double(s.w_shift)
    << "\n";
  o << "\n[domain]\nlengths = " << list(s.domain.lengths)
    << "\ngrid_points_per_axis = " << s.domain.grid_points_per_axis << "\n";
  if (s.noise.point) o << "\n[noise.point]\ns0 = " << list(s.noise.point->s0) << "\n";
  if (s.noise.distributed) {
    const auto& d = *s.noise.distributed;
    o << "\n[noise.distributed]\nkind = " << quote(to_string(d.kind)) << "\n";
    if (!d.lambdas.empty()) o << "lambdas = " << list(d.lambdas) << "\n";
    if (!d.basis.empty()) o << "basis = " << list(d.basis) << "\n";
    if (d.kind == DistributedKind::lr_valued) o << "r = " << quote(to_string(d.r)) << "\n";
  }
  if (s.theta.theta_B || s.theta.theta_C) {
    o << "\n[theta]\n";
    if (s.theta.theta_B) o << "theta_B = " << quote(to_string(*s.theta.theta_B)) << "\n";
    if (s.theta.theta_C) o << "theta_C = " << quote(to_string(*s.theta.theta_C)) << "\n";
  }
  detail::coefficient(o, "f", s.f);
  detail::coefficient(o, "b", s.b);
  detail::coefficient(o, "G", s.G);
  detail::coefficient(o, "C", s.C);
  o << "\n[initial]\nprofile = " << quote(s.initial.profile) << "\n";
  if (!s.initial.u0.empty()) o << "u0 = " << list(s.initial.u0) << "\n";
  if (!s.initial.v0.empty()) o << "v0 = " << list(s.initial.v0) << "\n";
  o << "amplitude = " << format_double(s.initial.amplitude) << "\neta = " << quote(to_string(s.initial.eta)) << "\n";
  o << "\n[time]\nT = " << format_double(s.T) << "\ndt = " << format_double(s.dt) << "\noutput_every = " << s.output.every
    << "\n";
  o << "\n[output]\nfractional_thetas = " << list(s.output.fractional_thetas) << "\nraw = " << (s.output.raw ? "true" : "false")
    << "\npersist_modes = " << s.output.persist_modes << "\npersist_paths = " << s.output.persist_paths << "\n";
  o << "\n[run]\npaths = " << s.paths << "\nseed = " << s.seed << "\n";
  return o.str();
}

/// FNV-1a 64 of the canonical serialization, as 16 hex digits.
inline std::string scenario_digest(const Scenario& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : serialize_scenario(s)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Setup

inline SpectralTruncation scenario_truncation(const Scenario& s) {
  s.domain.validate();
  return enumerate_modes(s.domain, s.kind, s.cutoff, s.w_shift);
}

inline AdmissibilityReport scenario_admissibility(const Scenario& s) {
  return check_admissibility(s.kind, s.domain.d, s.q, s.noise, s.theta);
}

inline std::vector<std::uint64_t> scenario_output_steps(const Scenario& s, std::uint64_t n_steps) {
  if (s.output.every == 0) throw ConfigError("time.output_every must be >= 1");
  if (n_steps % s.output.every != 0) throw ConfigError("time.output_every must divide the step count");
  std::vector<std::uint64_t> out;
  for (std::uint64_t k = 0; k <= n_steps; k += s.output.every) out.push_back(k);
  return out;
}

inline SimulationSetup make_setup(const Scenario& s) {
  SimulationSetup st;
  st.trunc = scenario_truncation(s);
  if (!(s.rho > 0.0)) throw ConfigError("equation.rho must be positive");
  if (!(s.T > 0.0) || !(s.dt > 0.0)) throw ConfigError("time.T and time.dt must be positive");
  st.rho = s.rho;
  st.noise = s.noise;
  st.f = s.f;
  st.b = s.b;
  st.G = s.G;
  st.C = s.C;
  st.T = s.T;
  st.dt = s.dt;
  const auto n = static_cast<Eigen::Index>(st.trunc.size());
  st.u0 = Eigen::VectorXd::Zero(n);
  st.v0 = Eigen::VectorXd::Zero(n);
  if (s.initial.profile == "coefficients") {
    if (static_cast<Eigen::Index>(s.initial.u0.size()) > n || static_cast<Eigen::Index>(s.initial.v0.size()) > n)
      throw ConfigError("initial coefficient lists exceed the truncation");
    for (std::size_t k = 0; k < s.initial.u0.size(); ++k) st.u0[static_cast<Eigen::Index>(k)] = s.initial.u0[k];
    for (std::size_t k = 0; k < s.initial.v0.size(); ++k) st.v0[static_cast<Eigen::Index>(k)] = s.initial.v0[k];
  } else if (s.initial.profile == "mode1") {
    st.u0[0] = s.initial.amplitude;
  } else if (s.initial.profile != "zero") {
    throw ConfigError("initial.profile must be zero, coefficients or mode1");
  }
  const double steps = s.T / s.dt;
  const auto ns = static_cast<std::uint64_t>(std::llround(steps));
  if (ns == 0 || std::abs(steps - static_cast<double>(ns)) > 1e-9 * steps) throw ConfigError("time.dt must divide time.T");
  st.output_steps = scenario_output_steps(s, ns);
  return st;
}

}  // namespace dampspde
