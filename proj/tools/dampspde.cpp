// dampspde: scenario checks, simulation runs and verification bundles.

#include <iostream>
#include <numbers>
#include <string>

#include <CLI11.hpp>

#include "dampspde/cli_runner.hpp"

int main(int argc, char** argv) {
  using namespace dampspde;
  CLI::App app{"Spectral Galerkin laboratory for structurally damped stochastic plate and wave equations"};
  app.set_version_flag("--version", DAMPSPDE_VERSION);
  app.require_subcommand(1);

  std::string config;
  auto* check = app.add_subcommand("check", "Admissibility windows and verdict for a scenario");
  check->add_option("config,--config", config, "Scenario TOML")->required();

  SimulateOptions sim;
  std::uint64_t seed = 0;
  int paths = 0;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run all paths of a scenario");
  simulate_cmd->add_option("config,--config", config, "Scenario TOML")->required();
  auto* seed_opt = simulate_cmd->add_option("--seed", seed, "Override run.seed");
  auto* paths_opt = simulate_cmd->add_option("--paths", paths, "Override run.paths")->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--out", sim.out, "Output directory")->capture_default_str();
  simulate_cmd->add_option("--threads", sim.threads, "Worker threads (fallback: DAMPSPDE_THREADS)");
  simulate_cmd->add_flag("--persist-increments", sim.persist_increments,
                         "Store per-step increments and leading modes for the first output.persist_paths paths");

  std::string run_dir;
  auto* verify = app.add_subcommand("verify", "Run the invariant suite on a run directory");
  verify->add_option("run-dir", run_dir, "Directory written by simulate")->required();

  double q = 2.0;
  int rank = 8, count = 10;
  std::int64_t samples = 10000;
  auto* gamma = app.add_subcommand("gamma", "Square-function versus Monte-Carlo gamma norms of random operators");
  gamma->add_option("--q", q, "Target exponent")->capture_default_str();
  gamma->add_option("--rank", rank)->capture_default_str();
  gamma->add_option("--samples", samples)->capture_default_str();
  gamma->add_option("--count", count, "Number of random operators")->capture_default_str();
  gamma->add_option("--seed", seed)->capture_default_str();

  std::string kind = "plate";
  int cutoff = 64;
  double rho = 1.0, phi = std::numbers::pi / 4;
  auto* sector = app.add_subcommand("sector", "Resolvent scan on the rays arg = +-(pi - phi), d = 1, L = 1");
  sector->add_option("--kind", kind)->check(CLI::IsMember({"plate", "wave"}))->capture_default_str();
  sector->add_option("--cutoff", cutoff)->capture_default_str();
  sector->add_option("--rho", rho)->capture_default_str();
  sector->add_option("--phi", phi)->capture_default_str();

  double delta = 0.0;
  std::string component = "v";
  int lag_lo = 0, lag_hi = 6, threads = 0;
  auto* regress = app.add_subcommand("regress", "Hoelder second-moment regression for a scenario");
  regress->add_option("config,--config", config, "Scenario TOML")->required();
  regress->add_option("--delta", delta, "Space index delta")->capture_default_str();
  regress->add_option("--component", component)->check(CLI::IsMember({"u", "v"}))->capture_default_str();
  regress->add_option("--paths", paths, "Paths (default: run.paths)");
  regress->add_option("--seed", seed, "Seed (default: run.seed)");
  regress->add_option("--lag-lo", lag_lo, "Smallest lag exponent (steps 2^k)")->capture_default_str();
  regress->add_option("--lag-hi", lag_hi, "Largest lag exponent (steps 2^k)")->capture_default_str();
  regress->add_option("--threads", threads);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) return cmd_check(config, std::cout, std::cerr);
    if (*simulate_cmd) {
      if (*seed_opt) sim.seed = seed;
      if (*paths_opt) sim.paths = paths;
      return cmd_simulate(config, sim, std::cout, std::cerr);
    }
    if (*verify) return cmd_verify(run_dir, std::cout, std::cerr);
    if (*gamma) return cmd_gamma(q, rank, samples, seed, count, std::cout);
    if (*sector) return cmd_sector(kind == "plate" ? EquationKind::plate : EquationKind::wave, cutoff, rho, phi, std::cout);
    if (*regress) {
      const Scenario s = load_scenario(config);
      const auto run = holder_regression(s, {{component == "u" ? Component::u : Component::v, delta}},
                                         paths > 0 ? paths : s.paths, regress->count("--seed") ? seed : s.seed,
                                         lag_lo, lag_hi, threads);
      print_regularity(std::cout, run.reports.front());
      return run.reports.front().pass ? exit_ok : exit_failed;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_failed;
  }
  return exit_usage;
}
