#pragma once

// Config-driven experiment runner behind the CLI: JSON schema parsing,
// model/method dispatch, observable evaluation, CSV and manifest emission.
// Kept as a library so tests can drive every step without spawning the
// binary.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qtbo/lindblad.hpp"
#include "qtbo/observables.hpp"

namespace qtbo::runner {

enum class ModelKind { optomech_fast, optomech_slow, neutron };
enum class MethodKind { master_rk4, mcwf_direct, mcwf_bo };

struct RunConfig {
  ModelKind model = ModelKind::optomech_fast;
  std::map<std::string, double> params;  // model-specific, validated per model
  MethodKind method = MethodKind::master_rk4;
  double dt = 1e-3;
  double t_final = 1.0;
  int sample_every = 100;
  int count = 1;  // trajectories
  std::uint64_t base_seed = 0;
  int workers = 0;  // 0 = hardware concurrency
  std::vector<std::string> observables;  // empty -> per-model defaults
  std::string output = "out";
};

// Strict schema: unknown fields anywhere are rejected with a field-path
// diagnostic (ConfigError).
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

struct SimulationResult {
  lindblad::DensitySeries series;
  std::size_t total_jumps = 0;                   // 0 for master_rk4
  std::vector<std::size_t> jumps_per_channel;   // empty for master_rk4
};

SimulationResult simulate(const RunConfig& config);

std::vector<std::string> default_observables(ModelKind model);

// Named observable on a finished series. Expectation-valued names map to
// operators; "negativity" takes the cavity/mirror bipartition.
observables::ObservableSeries evaluate(const RunConfig& config,
                                       const lindblad::DensitySeries& series,
                                       const std::string& name);

// 17-significant-digit, locale-independent number formatting for CSV cells.
std::string format_value(double v);

// Subcommand drivers. Each returns the files written inside the output
// directory, manifest.json last; the manifest is renamed into place only
// after every data file succeeded.
std::vector<std::string> run(const RunConfig& config);
std::vector<std::string> compare(const RunConfig& a, const RunConfig& b,
                                 const std::string& out_dir);

struct GammaConfig {
  double theta = 0.7853981633974483;  // pi/4
  double g_min = 0.0;
  double g_max = 4.0;
  int steps = 41;
  double eps1 = 1e-6;
  double eps2 = 2e-4;
  std::string output = "out";
};

GammaConfig parse_gamma_config(const std::string& json_text);
GammaConfig load_gamma_config(const std::string& path);

// (g, Gamma(g)/Gamma(first grid point)); the first ratio is exactly 1. A
// vanishing baseline is a defined zero-baseline ConfigError, not a division.
std::vector<std::pair<double, double>> gamma_sweep(const GammaConfig& config);
std::vector<std::string> write_gamma(const GammaConfig& config);

}  // namespace qtbo::runner
