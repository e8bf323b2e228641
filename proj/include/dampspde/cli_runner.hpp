#pragma once
// Command implementations behind the dampspde executable: check, simulate,
// verify, gamma, sector and regress. Each returns a process exit code and
// writes human-readable output to the given stream.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dampspde/analysis.hpp"
#include "dampspde/damped_semigroup.hpp"
#include "dampspde/gamma_calculus.hpp"
#include "dampspde/integrator.hpp"
#include "dampspde/noise_model.hpp"
#include "dampspde/scenario.hpp"

#ifndef DAMPSPDE_VERSION
#define DAMPSPDE_VERSION "0.1.0"
#endif

namespace dampspde {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

enum ExitCode { exit_ok = 0, exit_failed = 1, exit_usage = 2 };

/// Threads from the flag, else DAMPSPDE_THREADS, else the hardware count.
inline int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("DAMPSPDE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------
// check

inline void print_admissibility(std::ostream& os, const AdmissibilityReport& r) {
  os << "equation: " << to_string(r.kind) << ", d = " << r.d << ", q = " << to_string(r.q)
     << ", q' = " << to_string(r.q_dual) << "\n";
  os << "q window: " << r.q_window.str() << (r.q_ok ? "  ok" : "  VIOLATED") << "\n";
  if (r.has_point) {
    os << "theta_C window: " << r.theta_C.str() << "  chosen " << to_string(r.chosen_theta_C) << "\n";
    os << "theta_G window: " << r.theta_G.str() << "  chosen " << to_string(r.chosen_theta_G) << "\n";
  }
  if (r.has_distributed) {
    os << "theta_B window: " << r.theta_B.str() << "  chosen " << to_string(r.chosen_theta_B) << "  ["
       << r.theta_B_rule << "]\n";
    if (!r.theta_B_wide.empty()) os << "theta_B wide interval (not used): " << r.theta_B_wide << "\n";
  }
  os << "a = " << to_string(r.a) << ", tau = " << to_string(r.tau) << "\n";
  os << "H3 " << (r.h3 ? "ok" : "fail") << ", H4 " << (r.h4 ? "ok" : "fail") << ", H5 " << (r.h5 ? "ok" : "fail")
     << ", exponent conditions " << (r.exponent_conditions ? "ok" : "fail") << "\n";
  for (const auto& v : r.violations) os << "violation: " << v << "\n";
  os << "verdict: " << (r.verdict ? "admissible" : "inadmissible") << "\n";
}

inline int cmd_check(const std::string& config, std::ostream& os, std::ostream& err) {
  Scenario s;
  AdmissibilityReport r;
  try {
    s = load_scenario(config);
    r = scenario_admissibility(s);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  }
  print_admissibility(os, r);
  return r.verdict ? exit_ok : exit_failed;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  std::string out = "run";
  int threads = 0;
  bool persist_increments = false;
};

struct RunResult {
  std::string digest;
  fs::path dir;
  std::vector<std::string> files;
  double wall_seconds = 0.0;
  std::string scheme;
};

/// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    const double t = sum + x;
    c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

struct OutputNorms {
  double X = 0.0, E_half = 0.0, v_l2 = 0.0;
  std::vector<double> fractional;
};

inline OutputNorms snapshot_norms(const Snapshot& s, const SpectralTruncation& t, double q,
                                  const std::vector<double>& thetas, const SineGrid* grid) {
  OutputNorms n;
  n.E_half = fractional_norm(s.u, {0.5, q}, t, grid);
  n.v_l2 = fractional_norm(s.v, {0.0, q}, t, grid);
  n.X = std::hypot(n.E_half, n.v_l2);
  for (double th : thetas) n.fractional.push_back(fractional_norm(s.u, {th, q}, t, grid));
  return n;
}

namespace detail {

inline std::string path_file(std::uint64_t p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "path_%06llu.json", static_cast<unsigned long long>(p));
  return buf;
}

inline ojson persist_json(const Trajectory& tr, const SimulationSetup& st, int modes) {
  const auto m = static_cast<Eigen::Index>(std::min<std::size_t>(static_cast<std::size_t>(modes), st.trunc.size()));
  ojson j;
  j["path_id"] = tr.path_id;
  j["steps"] = tr.steps;
  j["dt"] = st.dt;
  j["modes"] = m;
  ojson u = ojson::array(), v = ojson::array();
  for (const auto& s : tr.snapshots) {
    u.push_back(std::vector<double>(s.u.data(), s.u.data() + m));
    v.push_back(std::vector<double>(s.v.data(), s.v.data() + m));
  }
  j["u"] = std::move(u);
  j["v"] = std::move(v);
  ojson pt = ojson::array();
  for (const auto& p : tr.increments.point) pt.push_back({p.dw, p.dI});
  j["point"] = std::move(pt);
  j["amplitude"] = tr.increments.point_amplitude;
  j["drift"] = tr.increments.point_drift;
  ojson fo = ojson::array();
  for (const auto& f : tr.increments.forcing) fo.push_back(std::vector<double>(f.data(), f.data() + m));
  j["forcing"] = std::move(fo);
  ojson di = ojson::array();
  for (const auto& row : tr.increments.distributed) {
    ojson r = ojson::array();
    for (Eigen::Index k = 0; k < m; ++k) r.push_back({row[static_cast<std::size_t>(k)].dw, row[static_cast<std::size_t>(k)].dI});
    di.push_back(std::move(r));
  }
  j["distributed"] = std::move(di);
  j["distributed_amplitude"] = tr.increments.distributed_amplitude;
  return j;
}

}  // namespace detail

/// Rebuilds a (mode-truncated) trajectory from a persisted increments file.
inline Trajectory load_persisted(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read " + file.string());
  const auto j = nlohmann::json::parse(in);
  Trajectory tr;
  tr.path_id = j.at("path_id").get<std::uint64_t>();
  tr.steps = j.at("steps").get<std::uint64_t>();
  const auto& u = j.at("u");
  const auto& v = j.at("v");
  for (std::size_t s = 0; s < u.size(); ++s) {
    const auto uu = u[s].get<std::vector<double>>();
    const auto vv = v[s].get<std::vector<double>>();
    Snapshot snap;
    snap.step = s;
    snap.u = Eigen::Map<const Eigen::VectorXd>(uu.data(), static_cast<Eigen::Index>(uu.size()));
    snap.v = Eigen::Map<const Eigen::VectorXd>(vv.data(), static_cast<Eigen::Index>(vv.size()));
    tr.snapshots.push_back(std::move(snap));
  }
  for (const auto& p : j.at("point")) tr.increments.point.push_back({p[0].get<double>(), p[1].get<double>()});
  tr.increments.point_amplitude = j.at("amplitude").get<std::vector<double>>();
  tr.increments.point_drift = j.at("drift").get<std::vector<double>>();
  for (const auto& f : j.at("forcing")) {
    const auto ff = f.get<std::vector<double>>();
    tr.increments.forcing.emplace_back(Eigen::Map<const Eigen::VectorXd>(ff.data(), static_cast<Eigen::Index>(ff.size())));
  }
  for (const auto& row : j.at("distributed")) {
    std::vector<BrownianStep> r;
    for (const auto& p : row) r.push_back({p[0].get<double>(), p[1].get<double>()});
    tr.increments.distributed.push_back(std::move(r));
  }
  tr.increments.distributed_amplitude = j.at("distributed_amplitude").get<double>();
  return tr;
}

/// Runs all paths of a scenario into `opt.out`. Paths are farmed to a worker
/// pool; a single writer emits them in path order, so data files do not
/// depend on the thread count.
inline RunResult simulate(Scenario s, const SimulateOptions& opt, std::ostream* log = nullptr) {
  const auto t_start = std::chrono::steady_clock::now();
  if (opt.seed) s.seed = *opt.seed;
  if (opt.paths) s.paths = *opt.paths;
  if (s.paths < 1) throw ConfigError("run.paths must be >= 1");
  const AdmissibilityReport adm = scenario_admissibility(s);
  if (!adm.verdict) throw ConfigError("scenario is inadmissible; run 'dampspde check' for details");

  SimulationSetup base = make_setup(s);
  const PathIntegrator probe(base);
  const std::uint64_t n_steps = probe.n_steps();
  const double q = to_double(s.q);
  std::optional<SineGrid> norm_grid;
  if (q != 2.0) norm_grid.emplace(base.trunc, 4 * base.trunc.cutoff + 1);
  const SineGrid* grid = norm_grid ? &*norm_grid : nullptr;

  RunResult res;
  res.dir = opt.out;
  res.digest = scenario_digest(s);
  res.scheme = probe.scheme() == Scheme::exact_linear_additive ? "exact_linear_additive" : "exponential_euler";
  fs::create_directories(res.dir);
  {
    std::ofstream sc(res.dir / "scenario.toml", std::ios::binary);
    sc << serialize_scenario(s);
  }
  const bool persist = opt.persist_increments;
  if (persist) fs::create_directories(res.dir / "increments");

  SimulationSetup persist_setup = base;
  persist_setup.record_increments = true;
  persist_setup.record_fine = true;

  struct PathOutput {
    std::string records;
    std::vector<OutputNorms> norms;
  };
  const int threads = std::min(resolve_threads(opt.threads), s.paths);
  const std::uint64_t paths = static_cast<std::uint64_t>(s.paths);
  const std::uint64_t window = static_cast<std::uint64_t>(2 * threads + 2);
  std::mutex mu;
  std::condition_variable cv;
  std::map<std::uint64_t, PathOutput> done;
  std::uint64_t next = 0, written = 0;
  std::string failure;
  bool stop = false;

  auto worker = [&] {
    for (;;) {
      std::uint64_t p;
      {
        std::unique_lock lk(mu);
        cv.wait(lk, [&] { return stop || next >= paths || next < written + window; });
        if (stop || next >= paths) return;
        p = next++;
      }
      PathOutput out;
      try {
        const bool keep = persist && p < static_cast<std::uint64_t>(s.output.persist_paths);
        const SimulationSetup& st = keep ? persist_setup : base;
        std::string recs;
        const Trajectory tr = PathIntegrator(st).run(s.seed, p, [&](const Snapshot& snap) {
          OutputNorms nrm = snapshot_norms(snap, st.trunc, q, s.output.fractional_thetas, grid);
          ojson rec;
          rec["path_id"] = p;
          rec["t"] = snap.t;
          rec["norms"] = {{"X", nrm.X}, {"E_half", nrm.E_half}, {"fractional", nrm.fractional}};
          if (s.output.raw) {
            rec["u"] = std::vector<double>(snap.u.data(), snap.u.data() + snap.u.size());
            rec["v"] = std::vector<double>(snap.v.data(), snap.v.data() + snap.v.size());
          }
          recs += rec.dump();
          recs += '\n';
          out.norms.push_back(std::move(nrm));
        });
        out.records = std::move(recs);
        if (keep) {
          std::ofstream f(res.dir / "increments" / detail::path_file(p), std::ios::binary);
          f << detail::persist_json(tr, st, s.output.persist_modes).dump() << "\n";
        }
      } catch (const std::exception& e) {
        std::lock_guard lk(mu);
        if (failure.empty()) failure = "path " + std::to_string(p) + ": " + e.what();
        stop = true;
        cv.notify_all();
        return;
      }
      std::lock_guard lk(mu);
      done.emplace(p, std::move(out));
      cv.notify_all();
    }
  };

  std::ofstream traj(res.dir / "trajectories.ndjson", std::ios::binary);
  const std::size_t n_out = base.output_steps.size();
  const std::size_t n_frac = s.output.fractional_thetas.size();
  std::vector<std::vector<CompensatedSum>> mom(n_out, std::vector<CompensatedSum>(3 + n_frac));

  std::vector<std::thread> pool;
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  while (true) {
    PathOutput out;
    {
      std::unique_lock lk(mu);
      cv.wait(lk, [&] { return stop || done.count(written) || written >= paths; });
      if (stop || written >= paths) break;
      out = std::move(done.at(written));
      done.erase(written);
    }
    traj << out.records;
    for (std::size_t i = 0; i < out.norms.size() && i < n_out; ++i) {
      const auto& nrm = out.norms[i];
      mom[i][0].add(nrm.X * nrm.X);
      mom[i][1].add(nrm.E_half * nrm.E_half);
      mom[i][2].add(nrm.v_l2 * nrm.v_l2);
      for (std::size_t f = 0; f < n_frac; ++f) mom[i][3 + f].add(nrm.fractional[f] * nrm.fractional[f]);
    }
    {
      std::lock_guard lk(mu);
      ++written;
      cv.notify_all();
    }
    if (log && (written % 50 == 0)) *log << "  " << written << "/" << paths << " paths\n";
  }
  for (auto& th : pool) th.join();
  if (!failure.empty()) throw NumericalError("simulation aborted at " + failure);
  traj.close();

  {
    std::ofstream m(res.dir / "moments.csv", std::ios::binary);
    m << "t,paths,mean_X_sq,mean_E_half_sq,mean_v_L2_sq";
    for (double th : s.output.fractional_thetas) m << ",mean_frac_sq_" << format_double(th);
    m << "\n";
    for (std::size_t i = 0; i < n_out; ++i) {
      m << format_double(static_cast<double>(base.output_steps[i]) * s.dt) << "," << paths;
      for (const auto& c : mom[i]) m << "," << format_double(c.value() / static_cast<double>(paths));
      m << "\n";
    }
  }
  res.files = {"scenario.toml", "trajectories.ndjson", "moments.csv", "run.json"};
  if (persist) res.files.push_back("increments/");
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  ojson run;
  run["tool_version"] = DAMPSPDE_VERSION;
  run["digest"] = res.digest;
  run["scheme"] = res.scheme;
  run["paths"] = paths;
  run["seed"] = s.seed;
  run["steps"] = n_steps;
  run["files"] = res.files;
  run["increments_persisted"] = persist;
  run["wall_clock_seconds"] = res.wall_seconds;
  std::ofstream(res.dir / "run.json", std::ios::binary) << run.dump(2) << "\n";
  return res;
}

inline int cmd_simulate(const std::string& config, const SimulateOptions& opt, std::ostream& os, std::ostream& err) {
  try {
    const RunResult r = simulate(load_scenario(config), opt, &os);
    os << "digest " << r.digest << "\nscheme " << r.scheme << "\nwrote " << r.dir.string() << " in " << r.wall_seconds
       << " s\n";
    return exit_ok;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_failed;
  }
}

// ---------------------------------------------------------------------------
// verify

struct VerifyLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

inline std::vector<std::uint64_t> even_checkpoints(std::uint64_t steps, int count) {
  std::vector<std::uint64_t> out;
  for (int i = 1; i <= count; ++i) {
    std::uint64_t n = steps * static_cast<std::uint64_t>(i) / static_cast<std::uint64_t>(count);
    n -= n % 2;
    if (n > 0) out.push_back(n);
  }
  return out;
}

inline int cmd_verify(const fs::path& dir, std::ostream& os, std::ostream& err) {
  for (const char* f : {"scenario.toml", "run.json", "trajectories.ndjson", "moments.csv"}) {
    if (!fs::exists(dir / f)) {
      err << "error: missing artifact " << (dir / f).string() << "\n";
      return exit_usage;
    }
  }
  Scenario s;
  nlohmann::json run;
  try {
    s = load_scenario((dir / "scenario.toml").string());
    std::ifstream in(dir / "run.json");
    run = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  }
  std::vector<VerifyLine> lines;
  auto add = [&](std::string name, bool pass, std::string detail) { lines.push_back({std::move(name), pass, std::move(detail)}); };

  const std::string digest = scenario_digest(s);
  add("digest", run.value("digest", std::string()) == digest, digest);

  const AdmissibilityReport adm = scenario_admissibility(s);
  add("admissibility", adm.verdict, adm.verdict ? "admissible" : "inadmissible");

  const SimulationSetup st = make_setup(s);
  const SectorReport sec = resolvent_scan(st.trunc, s.rho, std::numbers::pi / 4, default_radii(st.trunc));
  add("sector bound", sec.sup_norm < 1e3 && std::abs(sec.far_field_norm - 1.0) < 0.01,
      "sup " + format_double(sec.sup_norm) + ", far field " + format_double(sec.far_field_norm));
  std::vector<double> avals;
  for (const auto& m : st.trunc.modes) avals.push_back(m.a);
  for (double th : {0.25, 0.5}) {
    const ScaleReport sr = scale_identification_check(avals, s.rho, th, s.w_shift);
    add("scale identification theta=" + format_double(th), sr.spread() < 10.0, "spread " + format_double(sr.spread()));
  }

  {
    std::ifstream in(dir / "trajectories.ndjson");
    std::string line;
    std::size_t count = 0;
    bool finite = true;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("norms")) {
        finite = false;
        break;
      }
      finite = finite && j["norms"]["X"].is_number() && std::isfinite(j["norms"]["X"].get<double>());
      ++count;
    }
    const std::size_t expected = st.output_steps.size() * static_cast<std::size_t>(s.paths);
    add("trajectory records", finite && count == expected,
        std::to_string(count) + " records, " + std::to_string(expected) + " expected");
  }

  const fs::path inc = dir / "increments";
  if (fs::exists(inc)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(inc)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    const bool multiplicative = s.noise.distributed && !make_nemytskii(s.b).state_independent;
    const bool exact = PathIntegrator(st).scheme() == Scheme::exact_linear_additive;
    for (const auto& f : files) {
      Trajectory tr;
      try {
        tr = load_persisted(f);
      } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
      }
      const std::size_t m = static_cast<std::size_t>(tr.snapshots.front().u.size());
      std::vector<std::size_t> modes(m);
      for (std::size_t k = 0; k < m; ++k) modes[k] = k;
      const auto cps = even_checkpoints(tr.steps, 8);
      if (multiplicative) {
        add("weak residual " + f.filename().string(), true, "skipped: multiplicative noise increments are not persisted");
      } else {
        // The 1e-6 bound applies to exact stepping; other schemes are reported.
        const WeakResidualReport wr = weak_residual(tr, st, modes, cps);
        add("weak residual " + f.filename().string(), !exact || wr.max_relative <= 1e-6,
            "max relative " + format_double(wr.max_relative) + (exact ? "" : " (reported only: exponential Euler)"));
      }
      if (!s.noise.distributed) {
        const auto strides = kinematic_strides(st, m, tr.steps);
        if (!strides.empty()) {
          const KinematicReport kr = kinematic_consistency(tr, st, strides);
          add("u' = v " + f.filename().string(), kr.min_order >= 1.8, "min order " + format_double(kr.min_order) + " over strides " + std::to_string(strides.front()) + ".." +
                  std::to_string(strides.back()));
        }
      }
    }
  } else {
    add("weak residual", true, "skipped: increments not persisted (simulate --persist-increments)");
  }

  bool all = true;
  for (const auto& l : lines) {
    os << (l.pass ? "PASS " : "FAIL ") << l.name << ": " << l.detail << "\n";
    all = all && l.pass;
  }
  return all ? exit_ok : exit_failed;
}

// ---------------------------------------------------------------------------
// regress

struct RegressionRun {
  std::vector<RegularityReport> reports;
  AdmissibilityReport admissibility;
};

struct RegressionRequest {
  Component component;
  double delta;
  bool informational = false;
};

/// Streams `paths` paths through a Hoelder accumulator with dyadic lags
/// 2^lag_lo .. 2^lag_hi steps; S(t)U0 is subtracted first.
inline RegressionRun holder_regression(const Scenario& s, const std::vector<RegressionRequest>& requests, int paths,
                                       std::uint64_t seed, int lag_lo, int lag_hi, int threads = 1) {
  RegressionRun out;
  out.admissibility = scenario_admissibility(s);
  if (!out.admissibility.verdict) throw ConfigError("scenario is inadmissible");
  SimulationSetup st = make_setup(s);
  const PathIntegrator probe(st);
  HolderAccumulator acc(default_base_steps(probe.n_steps(), std::uint64_t{1} << lag_hi), dyadic_lags(lag_lo, lag_hi));
  st.output_steps = acc.required_steps();
  for (const auto& r : requests) acc.add_channel(r.component, r.delta, st.trunc);

  std::vector<StateField> flow;
  for (auto step : st.output_steps) flow.push_back(free_flow(st, static_cast<double>(step) * st.dt));

  const int nthreads = std::max(1, std::min(resolve_threads(threads), paths));
  std::vector<std::map<std::uint64_t, StateField>> results(static_cast<std::size_t>(paths));
  std::atomic<int> next{0};
  std::mutex mu;
  std::string failure;
  auto worker = [&] {
    const PathIntegrator integ(st);
    for (int p; (p = next++) < paths;) {
      try {
        std::map<std::uint64_t, StateField> snaps;
        std::size_t i = 0;
        integ.run(seed, static_cast<std::uint64_t>(p), [&](const Snapshot& snap) {
          while (st.output_steps[i] != snap.step) ++i;
          snaps[snap.step] = {snap.u - flow[i].u, snap.v - flow[i].v, snap.t};
        });
        results[static_cast<std::size_t>(p)] = std::move(snaps);
      } catch (const std::exception& e) {
        std::lock_guard lk(mu);
        if (failure.empty()) failure = "path " + std::to_string(p) + ": " + e.what();
        next = paths;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (!failure.empty()) throw NumericalError(failure);
  for (int p = 0; p < paths; ++p) acc.add_path(static_cast<std::uint64_t>(p), results[static_cast<std::size_t>(p)]);

  const double eta = to_double(s.initial.eta);
  const double bound = std::min(eta, to_double(out.admissibility.regularity_bound()));
  for (std::size_t c = 0; c < requests.size(); ++c) {
    RegularityReport r = acc.report(c, st.dt, bound - requests[c].delta);
    r.informational = requests[c].informational;
    out.reports.push_back(r);
  }
  return out;
}

inline void print_regularity(std::ostream& os, const RegularityReport& r) {
  os << "# " << r.note << "\n";
  os << "component " << (r.component == Component::u ? "u" : "v") << ", delta " << format_double(r.delta) << ", paths "
     << r.paths << ", base points " << r.base_points << "\n";
  os << "log2_h,log2_moment\n";
  for (std::size_t i = 0; i < r.log2_h.size(); ++i)
    os << format_double(r.log2_h[i]) << "," << format_double(r.log2_moment[i]) << "\n";
  os << "slope " << format_double(r.measured_slope) << " +- " << format_double(r.slope_halfwidth) << ", slope/2 "
     << format_double(r.measured_slope / 2) << ", predicted " << format_double(r.predicted_bound) << ", "
     << (r.informational ? "informational" : (r.pass ? "PASS" : "FAIL")) << "\n";
}

// ---------------------------------------------------------------------------
// gamma and sector benches

/// Random rank-m operator with smooth columns on a midpoint grid of (0,1).
inline FiniteRankOperator random_operator(CounterRng& rng, int rank, int grid_points, double q) {
  FiniteRankOperator op;
  op.q = q;
  op.cell = 1.0 / grid_points;
  op.columns.resize(grid_points, rank);
  for (int n = 0; n < rank; ++n) {
    double c[5];
    for (double& ck : c) ck = rng.normal();
    for (int j = 0; j < grid_points; ++j) {
      const double s = (j + 0.5) * op.cell;
      double v = 0.0;
      for (int k = 0; k < 5; ++k) v += c[k] * std::sin((k + 1) * std::numbers::pi * s) / (k + 1);
      op.columns(j, n) = v;
    }
  }
  return op;
}

inline int cmd_gamma(double q, int rank, std::int64_t samples, std::uint64_t seed, int count, std::ostream& os) {
  CounterRng rng(seed, derive_stream(0, Channel::auxiliary, 0x9a));
  os << "operator,q,square_function,mc,mc_halfwidth,ratio\n";
  for (int i = 0; i < count; ++i) {
    const FiniteRankOperator op = random_operator(rng, rank, 128, q);
    const auto sf = gamma_norm_square_function(op);
    const auto mc = gamma_norm_mc(op, samples, seed + static_cast<std::uint64_t>(i));
    os << i << "," << format_double(q) << "," << format_double(sf.value) << "," << format_double(mc.value) << ","
       << format_double(mc.ci_halfwidth) << "," << format_double(mc.value / sf.value) << "\n";
  }
  return exit_ok;
}

inline int cmd_sector(EquationKind kind, int cutoff, double rho, double phi, std::ostream& os) {
  BoxDomain dom;
  const SpectralTruncation t = enumerate_modes(dom, kind, cutoff);
  const SectorReport r = resolvent_scan(t, rho, phi, default_radii(t));
  os << "radius,ray_max,argmax_mu\n";
  for (std::size_t i = 0; i < r.radii.size(); ++i)
    os << format_double(r.radii[i]) << "," << format_double(r.ray_max[i]) << "," << format_double(r.argmax[i].mu) << "\n";
  os << "# sup " << format_double(r.sup_norm) << ", far field " << format_double(r.far_field_norm) << "\n";
  return exit_ok;
}

}  // namespace dampspde
