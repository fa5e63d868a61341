// fastslow: command-line front end for the fast-slow map toolkit.

#include "fastslow/app.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

using namespace fastslow;

namespace {

struct Globals {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 1;
  int threads = 1;
};

struct Overrides {
  std::optional<double> eps;
  std::optional<long> m;
  std::optional<long> steps;
  std::optional<int> base_grid;
  std::vector<double> alpha_range;
  std::string ode = "hopf";
  std::string section = "y=0";
  std::string regime_case;
};

void apply(const Overrides& ov, const std::string& command, app::Config& cfg) {
  if (ov.eps) {
    if (!(*ov.eps >= 0.0)) throw ConfigError("--eps must be non-negative");
    cfg.eps = *ov.eps;
  }
  if (ov.m) cfg.m = *ov.m;
  if (ov.base_grid) cfg.base_grid = *ov.base_grid;
  if (ov.steps) {
    if (command == "reduced") cfg.reduced_steps = *ov.steps;
    else if (command == "regimes") cfg.regime_steps = *ov.steps;
    else cfg.steps = *ov.steps;
  }
  if (!ov.alpha_range.empty()) {
    if (ov.alpha_range.size() != 2 || !(ov.alpha_range[0] < ov.alpha_range[1]))
      throw ConfigError("--alpha-range needs two increasing values");
    cfg.alpha_range = {ov.alpha_range[0], ov.alpha_range[1]};
  }
  if (command == "poincare") {
    if (ov.ode != "hopf") throw ConfigError("unknown oscillator '" + ov.ode + "' (available: hopf)");
    if (ov.section != "y=0") throw ConfigError("unknown section '" + ov.section + "' (available: y=0)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Fast-slow map analysis: critical and slow manifolds, spectra, regimes."};
  cli.require_subcommand(1);
  Globals g;
  cli.add_option("--config", g.config, "JSON configuration file");
  cli.add_option("--out", g.out, "output directory")->capture_default_str();
  cli.add_option("--seed", g.seed, "seed for randomized test points")->capture_default_str();
  cli.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  Overrides ov;
  using Runner = app::FileSet (*)(const app::Config&, const app::RunOptions&);
  const std::vector<std::tuple<std::string, std::string, Runner>> commands{
      {"analyze", "critical manifold, singularities, slow manifolds and fixed points", app::run_analyze},
      {"simulate", "iterate the map and export the trajectory", app::run_simulate},
      {"slow-manifold", "first-order and invariant slow manifolds per branch", app::run_slow_manifold},
      {"singularities", "fold, flip and Neimark-Sacker points of the critical manifold", app::run_singularities},
      {"reduced", "reduced orbits, m-step composition and fiber rates", app::run_reduced},
      {"regimes", "Chialvo regime reproduction", app::run_regimes_command},
      {"euler-study", "distance of Euler slow manifolds to the ODE slow manifold", app::run_euler_study_command},
      {"poincare", "return-map analysis of the Hopf oscillator", app::run_poincare},
      {"oracle", "closed-form checks of the built-in models", app::run_oracle},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help, run] : commands) {
    auto* sub = cli.add_subcommand(name, help);
    sub->add_option("--eps", ov.eps, "perturbation parameter");
    subs[name] = sub;
  }
  subs["simulate"]->add_option("--steps", ov.steps, "iterations");
  subs["reduced"]->add_option("--m", ov.m, "iterates composed");
  subs["reduced"]->add_option("--steps", ov.steps, "reduced steps");
  subs["reduced"]->add_option("--base-grid", ov.base_grid, "fiber probes per branch")->check(CLI::PositiveNumber);
  subs["regimes"]->add_option("--case", ov.regime_case, "I, II, III or IV (all when absent)");
  subs["regimes"]->add_option("--steps", ov.steps, "iterations per case");
  subs["poincare"]->add_option("--ode", ov.ode, "oscillator")->capture_default_str();
  subs["poincare"]->add_option("--section", ov.section, "section")->capture_default_str();
  subs["poincare"]->add_option("--alpha-range", ov.alpha_range, "alpha interval")->expected(2);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    app::Config cfg = g.config.empty() ? app::Config{} : app::load_config(g.config);
    for (const auto& [name, help, run] : commands) {
      if (!subs[name]->parsed()) continue;
      apply(ov, name, cfg);
      app::RunOptions opts;
      opts.seed = g.seed;
      opts.threads = g.threads;
      if (!ov.regime_case.empty()) opts.regime_case = app::parse_regime_case(ov.regime_case);
      const auto files = run(cfg, opts);
      app::write_files(g.out, files);
      for (const auto& [file, content] : files) std::cout << g.out << "/" << file << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
