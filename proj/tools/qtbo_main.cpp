// qtbo: config-driven runner for the open-system Born-Oppenheimer toolkit.
//
//   qtbo run     --config run.json [--out DIR] [--seed U64] [--trajectories N]
//                [--workers N] [--dt F] [--t-final F]
//   qtbo compare --config a.json --config b.json [--out DIR] [...same overrides]
//   qtbo gamma   --config sweep.json [--out DIR]
//
// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 degeneracy.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qtbo/errors.hpp"
#include "qtbo/runner.hpp"

namespace {

struct Overrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trajectories;
  std::optional<int> workers;
  std::optional<double> dt;
  std::optional<double> t_final;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--out", o.out, "Output directory (overrides the config)");
  cmd->add_option("--seed", o.seed, "Base seed override");
  cmd->add_option("--trajectories", o.trajectories, "Trajectory count override");
  cmd->add_option("--workers", o.workers, "Worker thread count override (0 = auto)");
  cmd->add_option("--dt", o.dt, "Step size override");
  cmd->add_option("--t-final", o.t_final, "Final time override");
}

void apply(const Overrides& o, qtbo::runner::RunConfig& c) {
  if (o.out) c.output = *o.out;
  if (o.seed) c.base_seed = *o.seed;
  if (o.trajectories) c.count = *o.trajectories;
  if (o.workers) c.workers = *o.workers;
  if (o.dt) c.dt = *o.dt;
  if (o.t_final) c.t_final = *o.t_final;
  if (!(c.dt > 0.0)) throw qtbo::ConfigError("override: dt must be positive");
  if (!(c.t_final >= c.dt))
    throw qtbo::ConfigError("override: t-final must be at least dt");
  if (c.count < 1) throw qtbo::ConfigError("override: trajectories must be at least 1");
  if (c.workers < 0) throw qtbo::ConfigError("override: workers must be non-negative");
}

void report(const std::string& dir, const std::vector<std::string>& files) {
  for (const auto& f : files) std::cout << dir << "/" << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-trajectory simulations with Born-Oppenheimer factorization"};
  app.require_subcommand(1);

  std::string run_config_path;
  Overrides run_overrides;
  CLI::App* run_cmd = app.add_subcommand("run", "Execute one simulation config");
  run_cmd->add_option("--config", run_config_path, "Run config JSON")->required();
  add_overrides(run_cmd, run_overrides);

  std::vector<std::string> compare_config_paths;
  Overrides compare_overrides;
  CLI::App* compare_cmd =
      app.add_subcommand("compare", "Fidelity between two methods on one grid");
  compare_cmd->add_option("--config", compare_config_paths, "Two run config JSONs")
      ->expected(2);
  add_overrides(compare_cmd, compare_overrides);

  std::string gamma_config_path;
  std::optional<std::string> gamma_out;
  CLI::App* gamma_cmd =
      app.add_subcommand("gamma", "Normalized validity-measure sweep over g");
  gamma_cmd->add_option("--config", gamma_config_path, "Sweep config JSON")->required();
  gamma_cmd->add_option("--out", gamma_out, "Output directory (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) {
      qtbo::runner::RunConfig config = qtbo::runner::load_run_config(run_config_path);
      apply(run_overrides, config);
      report(config.output, qtbo::runner::run(config));
    } else if (compare_cmd->parsed()) {
      if (compare_config_paths.size() != 2)
        throw qtbo::ConfigError("compare needs exactly two --config files");
      qtbo::runner::RunConfig a = qtbo::runner::load_run_config(compare_config_paths[0]);
      qtbo::runner::RunConfig b = qtbo::runner::load_run_config(compare_config_paths[1]);
      apply(compare_overrides, a);
      apply(compare_overrides, b);
      std::string out_dir = compare_overrides.out.value_or("out");
      report(out_dir, qtbo::runner::compare(a, b, out_dir));
    } else {
      qtbo::runner::GammaConfig config =
          qtbo::runner::load_gamma_config(gamma_config_path);
      if (gamma_out) config.output = *gamma_out;
      report(config.output, qtbo::runner::write_gamma(config));
    }
    return 0;
  } catch (const qtbo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const qtbo::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const qtbo::DegeneracyError& e) {
    std::cerr << "degeneracy error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
