#include "qtbo/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qtbo/bo.hpp"
#include "qtbo/errors.hpp"
#include "qtbo/mcwf.hpp"
#include "qtbo/models.hpp"

namespace qtbo::runner {

namespace fs = std::filesystem;
using hilbert::Operator;
using hilbert::SpaceShape;
using hilbert::StateVector;
using hilbert::VectorXcd;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError("config: " + path + ": " + msg);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) fail(path, "unknown field '" + it.key() + "'");
  }
}

std::string joined_path(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

double get_number(const json& obj, const std::string& path, const char* key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(joined_path(path, key), "expected a number");
  return v.get<double>();
}

int get_int(const json& obj, const std::string& path, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    fail(joined_path(path, key), "expected an integer");
  return v.get<int>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(joined_path(path, key), "expected a string");
  return v.get<std::string>();
}

json parse_root(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be a JSON object");
  return root;
}

const std::vector<std::string>& param_names(ModelKind model) {
  static const std::vector<std::string> optomech{"omega", "capital_omega", "g",
                                                 "gamma", "kappa", "n_a", "n_b"};
  static const std::vector<std::string> neutron{"theta", "g", "eps1", "eps2", "T"};
  return model == ModelKind::neutron ? neutron : optomech;
}

const std::vector<std::string>& observable_names(ModelKind model) {
  static const std::vector<std::string> optomech{"negativity", "x", "n_a", "n_b"};
  static const std::vector<std::string> neutron{"sigma_z", "sigma_x", "sigma_y"};
  return model == ModelKind::neutron ? neutron : optomech;
}

std::string joined(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

ModelKind parse_model(const std::string& s) {
  if (s == "optomech_fast") return ModelKind::optomech_fast;
  if (s == "optomech_slow") return ModelKind::optomech_slow;
  if (s == "neutron") return ModelKind::neutron;
  fail("model", "'" + s + "' is not one of optomech_fast, optomech_slow, neutron");
}

MethodKind parse_method(const std::string& s) {
  if (s == "master_rk4") return MethodKind::master_rk4;
  if (s == "mcwf_direct") return MethodKind::mcwf_direct;
  if (s == "mcwf_bo") return MethodKind::mcwf_bo;
  fail("method", "'" + s + "' is not one of master_rk4, mcwf_direct, mcwf_bo");
}

std::string model_name(ModelKind m) {
  switch (m) {
    case ModelKind::optomech_fast: return "optomech_fast";
    case ModelKind::optomech_slow: return "optomech_slow";
    case ModelKind::neutron: return "neutron";
  }
  return "?";
}

std::string method_name(MethodKind m) {
  switch (m) {
    case MethodKind::master_rk4: return "master_rk4";
    case MethodKind::mcwf_direct: return "mcwf_direct";
    case MethodKind::mcwf_bo: return "mcwf_bo";
  }
  return "?";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

models::OptomechParams optomech_params(const std::map<std::string, double>& params) {
  models::OptomechParams p;
  for (const auto& [key, value] : params) {
    if (key == "omega") p.omega = value;
    else if (key == "capital_omega") p.capital_omega = value;
    else if (key == "g") p.g = value;
    else if (key == "gamma") p.gamma = value;
    else if (key == "kappa") p.kappa = value;
    else if (key == "n_a") p.n_a = static_cast<int>(value);
    else if (key == "n_b") p.n_b = static_cast<int>(value);
  }
  return p;
}

models::NeutronParams neutron_params(const std::map<std::string, double>& params) {
  models::NeutronParams p;
  for (const auto& [key, value] : params) {
    if (key == "theta") p.theta = value;
    else if (key == "g") p.g = value;
    else if (key == "eps1") p.eps1 = value;
    else if (key == "eps2") p.eps2 = value;
    else if (key == "T") p.T = value;
  }
  return p;
}

// (|0> + |1>)(|0> + |1>)/2, the worked cavity-mirror initial state.
StateVector optomech_initial(const models::OptomechParams& p) {
  SpaceShape shape({p.n_a, p.n_b});
  VectorXcd v = VectorXcd::Zero(shape.total_dim());
  v(0) = v(1) = v(p.n_b) = v(p.n_b + 1) = 0.5;
  return StateVector(shape, v);
}

json config_echo(const RunConfig& c) {
  json j;
  j["model"] = model_name(c.model);
  j["method"] = method_name(c.method);
  j["params"] = c.params;
  j["time"] = {{"dt", c.dt}, {"t_final", c.t_final}, {"sample_every", c.sample_every}};
  j["trajectories"] = {{"count", c.count}, {"base_seed", c.base_seed}};
  j["observables"] = c.observables.empty() ? default_observables(c.model)
                                           : c.observables;
  j["workers"] = c.workers;
  j["output"] = c.output;
  return j;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write output file '" + path.string() + "'");
  out << text;
  out.flush();
  if (!out) throw ConfigError("failed writing output file '" + path.string() + "'");
}

// Data files first, then the manifest renamed into place so a manifest's
// existence implies a complete run.
void write_manifest(const fs::path& dir, json manifest) {
  manifest["version"] = kVersion;
  fs::path tmp = dir / "manifest.json.tmp";
  write_text_file(tmp, manifest.dump(2) + "\n");
  fs::rename(tmp, dir / "manifest.json");
}

std::string csv_series(const observables::ObservableSeries& s) {
  std::string text = "t,value\n";
  for (std::size_t j = 0; j < s.times.size(); ++j)
    text += format_value(s.times[j]) + "," + format_value(s.values[j]) + "\n";
  return text;
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root = parse_root(json_text);
  check_keys(root, "top level",
             {"model", "method", "params", "time", "trajectories", "observables",
              "workers", "output"});
  if (!root.contains("model")) fail("model", "required field is missing");
  if (!root.contains("method")) fail("method", "required field is missing");

  RunConfig c;
  c.model = parse_model(get_string(root, "", "model", ""));
  c.method = parse_method(get_string(root, "", "method", ""));
  if (c.model == ModelKind::neutron && c.method == MethodKind::master_rk4)
    fail("method",
         "the semiclassically driven neutron has no static master-equation "
         "reference; use mcwf_direct or mcwf_bo");

  if (root.contains("params")) {
    const json& params = root.at("params");
    if (!params.is_object()) fail("params", "expected an object");
    const auto& allowed = param_names(c.model);
    for (auto it = params.begin(); it != params.end(); ++it) {
      if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
        fail("params", "unknown parameter '" + it.key() + "' for model " +
                           model_name(c.model) + " (expected: " + joined(allowed) + ")");
      if (!it.value().is_number())
        fail("params." + it.key(), "expected a number");
      double v = it.value().get<double>();
      if ((it.key() == "n_a" || it.key() == "n_b") &&
          (v != std::floor(v) || v < 1.0))
        fail("params." + it.key(), "expected a positive integer");
      c.params[it.key()] = v;
    }
  }

  if (root.contains("time")) {
    const json& time = root.at("time");
    if (!time.is_object()) fail("time", "expected an object");
    check_keys(time, "time", {"dt", "t_final", "sample_every"});
    c.dt = get_number(time, "time", "dt", c.dt);
    c.t_final = get_number(time, "time", "t_final", c.t_final);
    c.sample_every = get_int(time, "time", "sample_every", c.sample_every);
  }
  if (!(c.dt > 0.0)) fail("time.dt", "must be positive");
  if (!(c.t_final >= c.dt)) fail("time.t_final", "must be at least dt");
  if (c.sample_every < 1) fail("time.sample_every", "must be at least 1");

  if (root.contains("trajectories")) {
    const json& traj = root.at("trajectories");
    if (!traj.is_object()) fail("trajectories", "expected an object");
    check_keys(traj, "trajectories", {"count", "base_seed"});
    c.count = get_int(traj, "trajectories", "count", c.count);
    if (traj.contains("base_seed")) {
      const json& seed = traj.at("base_seed");
      if (!seed.is_number_integer() && !seed.is_number_unsigned())
        fail("trajectories.base_seed", "expected a non-negative integer");
      if (seed.is_number_integer() && seed.get<std::int64_t>() < 0)
        fail("trajectories.base_seed", "expected a non-negative integer");
      c.base_seed = seed.get<std::uint64_t>();
    }
  }
  if (c.count < 1) fail("trajectories.count", "must be at least 1");

  if (root.contains("workers")) c.workers = get_int(root, "", "workers", 0);
  if (c.workers < 0) fail("workers", "must be non-negative");

  if (root.contains("observables")) {
    const json& obs = root.at("observables");
    if (!obs.is_array()) fail("observables", "expected an array of names");
    const auto& valid = observable_names(c.model);
    for (const json& item : obs) {
      if (!item.is_string()) fail("observables", "expected an array of names");
      std::string name = item.get<std::string>();
      if (std::find(valid.begin(), valid.end(), name) == valid.end())
        fail("observables", "unknown observable '" + name + "' for model " +
                                model_name(c.model) + " (expected: " + joined(valid) +
                                ")");
      c.observables.push_back(name);
    }
  }

  c.output = get_string(root, "", "output", c.output);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_file(path));
}

std::vector<std::string> default_observables(ModelKind model) {
  if (model == ModelKind::neutron) return {"sigma_z"};
  return {"negativity", "x"};
}

SimulationResult simulate(const RunConfig& config) {
  mcwf::TrajectoryConfig tc;
  tc.dt = config.dt;
  tc.t_final = config.t_final;
  tc.n_traj = config.count;
  tc.base_seed = config.base_seed;
  tc.sample_every = config.sample_every;
  tc.workers = config.workers;
  tc.propagator = config.method == MethodKind::mcwf_bo
                      ? mcwf::PropagatorKind::bo_spectral
                      : mcwf::PropagatorKind::direct_rk4;

  SimulationResult out;
  if (config.model == ModelKind::neutron) {
    if (config.method == MethodKind::master_rk4)
      throw ConfigError(
          "the semiclassically driven neutron has no static master-equation "
          "reference; use mcwf_direct or mcwf_bo");
    models::NeutronParams p = neutron_params(config.params);
    models::NeutronDrive drive = models::neutron_drive_model(p);
    const mcwf::TrajectoryEngine& engine = config.method == MethodKind::mcwf_direct
                                               ? drive.direct
                                               : drive.adiabatic;
    mcwf::EnsembleResult ens = mcwf::ensemble_average(engine, tc, drive.initial);
    out.series.times = std::move(ens.times);
    out.series.states = std::move(ens.states);
    out.total_jumps = ens.total_jumps;
    out.jumps_per_channel = std::move(ens.jumps_per_channel);
    return out;
  }

  bo::Variant variant = config.model == ModelKind::optomech_fast
                            ? bo::Variant::fast_dissipation
                            : bo::Variant::slow_dissipation;
  models::OptomechParams p = optomech_params(config.params);
  models::OptomechModel m = models::optomech_model(p, variant);
  StateVector psi0 = optomech_initial(p);

  if (config.method == MethodKind::master_rk4) {
    out.series = lindblad::evolve(m.lindblad, hilbert::projector(psi0), config.dt,
                                  config.t_final, config.sample_every);
    return out;
  }

  mcwf::TrajectoryEngine engine;
  if (config.method == MethodKind::mcwf_direct) {
    engine = mcwf::direct_engine(m.lindblad);
  } else {
    bo::BOFactorization f = bo::build_factorization(m.slow_h, m.fast_modes, variant);
    bo::SlowModeSet s = bo::zero_order_modes(f);
    engine = bo::spectral_engine(f, s, m.lindblad.jumps);
  }
  mcwf::EnsembleResult ens = mcwf::ensemble_average(engine, tc, psi0);
  out.series.times = std::move(ens.times);
  out.series.states = std::move(ens.states);
  out.total_jumps = ens.total_jumps;
  out.jumps_per_channel = std::move(ens.jumps_per_channel);
  return out;
}

observables::ObservableSeries evaluate(const RunConfig& config,
                                       const lindblad::DensitySeries& series,
                                       const std::string& name) {
  if (series.states.empty()) throw ConfigError("evaluate: empty series");
  const SpaceShape& shape = series.states.front().shape;

  if (name == "negativity") {
    if (shape.factors() != 2)
      throw ShapeError("negativity needs a bipartite state");
    observables::ObservableSeries out;
    out.label = name;
    out.times = series.times;
    out.values.reserve(series.states.size());
    for (const auto& rho : series.states)
      out.values.push_back(observables::negativity(rho, {1}));
    return out;
  }

  Operator op;
  if (config.model == ModelKind::neutron) {
    if (name == "sigma_z") op = hilbert::pauli_z();
    else if (name == "sigma_x") op = hilbert::pauli_x();
    else if (name == "sigma_y") op = hilbert::pauli_y();
    else
      throw ConfigError("unknown observable '" + name + "' (expected: " +
                        joined(observable_names(config.model)) + ")");
  } else {
    int n_a = shape.factor_dims[0], n_b = shape.factor_dims[1];
    Operator ia = hilbert::identity(SpaceShape({n_a}));
    Operator ib = hilbert::identity(SpaceShape({n_b}));
    if (name == "x")
      op = hilbert::tensor(
          ia, Operator(SpaceShape({n_b}), hilbert::annihilation(n_b).entries +
                                              hilbert::creation(n_b).entries));
    else if (name == "n_a") op = hilbert::tensor(hilbert::number(n_a), ib);
    else if (name == "n_b") op = hilbert::tensor(ia, hilbert::number(n_b));
    else
      throw ConfigError("unknown observable '" + name + "' (expected: " +
                        joined(observable_names(config.model)) + ")");
  }
  return observables::series(op, series.times, series.states, name);
}

std::string format_value(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::vector<std::string> run(const RunConfig& config) {
  auto start = std::chrono::steady_clock::now();
  fs::path dir(config.output);
  fs::create_directories(dir);

  SimulationResult sim = simulate(config);
  std::vector<std::string> names =
      config.observables.empty() ? default_observables(config.model)
                                 : config.observables;

  std::vector<std::string> files;
  json file_map = json::object();
  for (const std::string& name : names) {
    observables::ObservableSeries s = evaluate(config, sim.series, name);
    std::string filename = name + ".csv";
    write_text_file(dir / filename, csv_series(s));
    files.push_back(filename);
    file_map[name] = filename;
  }

  json manifest;
  manifest["config"] = config_echo(config);
  manifest["files"] = file_map;
  manifest["jumps"] = {{"total", sim.total_jumps},
                       {"per_channel", sim.jumps_per_channel}};
  manifest["wall_clock_seconds"] = elapsed_seconds(start);
  write_manifest(dir, std::move(manifest));
  files.push_back("manifest.json");
  return files;
}

std::vector<std::string> compare(const RunConfig& a, const RunConfig& b,
                                 const std::string& out_dir) {
  if (a.model != b.model)
    throw ConfigError("compare: configs use different models (" +
                      model_name(a.model) + " vs " + model_name(b.model) + ")");
  if (a.dt != b.dt || a.t_final != b.t_final || a.sample_every != b.sample_every)
    throw ConfigError("compare: time grids differ");

  auto start = std::chrono::steady_clock::now();
  fs::path dir(out_dir);
  fs::create_directories(dir);

  SimulationResult sa = simulate(a);
  SimulationResult sb = simulate(b);
  if (sa.series.times.size() != sb.series.times.size())
    throw ConfigError("compare: sample grids differ");

  std::string text = "t,fidelity\n";
  for (std::size_t j = 0; j < sa.series.times.size(); ++j) {
    double f = observables::fidelity(sa.series.states[j], sb.series.states[j]);
    text += format_value(sa.series.times[j]) + "," + format_value(f) + "\n";
  }
  write_text_file(dir / "fidelity.csv", text);

  json manifest;
  manifest["config_a"] = config_echo(a);
  manifest["config_b"] = config_echo(b);
  manifest["files"] = {{"fidelity", "fidelity.csv"}};
  manifest["jumps"] = {{"total_a", sa.total_jumps}, {"total_b", sb.total_jumps}};
  manifest["wall_clock_seconds"] = elapsed_seconds(start);
  write_manifest(dir, std::move(manifest));
  return {"fidelity.csv", "manifest.json"};
}

GammaConfig parse_gamma_config(const std::string& json_text) {
  json root = parse_root(json_text);
  check_keys(root, "top level",
             {"theta", "g_min", "g_max", "steps", "eps1", "eps2", "output"});
  GammaConfig c;
  c.theta = get_number(root, "", "theta", c.theta);
  c.g_min = get_number(root, "", "g_min", c.g_min);
  c.g_max = get_number(root, "", "g_max", c.g_max);
  c.steps = get_int(root, "", "steps", c.steps);
  c.eps1 = get_number(root, "", "eps1", c.eps1);
  c.eps2 = get_number(root, "", "eps2", c.eps2);
  c.output = get_string(root, "", "output", c.output);
  if (c.steps < 1) fail("steps", "must be at least 1");
  if (c.g_min < 0.0) fail("g_min", "must be non-negative");
  if (!(c.g_max >= c.g_min)) fail("g_max", "must be at least g_min");
  if (c.steps == 1 && c.g_max != c.g_min)
    fail("steps", "a single step needs g_max == g_min");
  return c;
}

GammaConfig load_gamma_config(const std::string& path) {
  return parse_gamma_config(read_file(path));
}

std::vector<std::pair<double, double>> gamma_sweep(const GammaConfig& config) {
  std::vector<double> grid(config.steps);
  for (int j = 0; j < config.steps; ++j)
    grid[j] = config.steps == 1
                  ? config.g_min
                  : config.g_min + (config.g_max - config.g_min) * j /
                                       (config.steps - 1);

  std::vector<double> raw(config.steps);
  for (int j = 0; j < config.steps; ++j) {
    models::NeutronParams p;
    p.theta = config.theta;
    p.g = grid[j];
    p.eps1 = config.eps1;
    p.eps2 = config.eps2;
    try {
      raw[j] = models::neutron_gamma(p);
    } catch (const DegeneracyError& e) {
      std::ostringstream msg;
      msg << e.what() << " [sweep index " << j << ", g=" << grid[j] << "]";
      throw DegeneracyError(msg.str());
    }
  }

  if (!(raw[0] > 0.0))
    throw ConfigError(
        "gamma sweep: zero baseline; the validity measure vanishes at the first "
        "grid point (the branches decouple), so the normalized sweep is undefined");

  std::vector<std::pair<double, double>> out(config.steps);
  for (int j = 0; j < config.steps; ++j) out[j] = {grid[j], raw[j] / raw[0]};
  return out;
}

std::vector<std::string> write_gamma(const GammaConfig& config) {
  auto start = std::chrono::steady_clock::now();
  fs::path dir(config.output);
  fs::create_directories(dir);

  auto sweep = gamma_sweep(config);
  std::string text = "g,ratio\n";
  for (const auto& [g, ratio] : sweep)
    text += format_value(g) + "," + format_value(ratio) + "\n";
  write_text_file(dir / "gamma.csv", text);

  json manifest;
  manifest["config"] = {{"theta", config.theta}, {"g_min", config.g_min},
                        {"g_max", config.g_max}, {"steps", config.steps},
                        {"eps1", config.eps1},   {"eps2", config.eps2},
                        {"output", config.output}};
  manifest["files"] = {{"gamma", "gamma.csv"}};
  manifest["wall_clock_seconds"] = elapsed_seconds(start);
  write_manifest(dir, std::move(manifest));
  return {"gamma.csv", "manifest.json"};
}

}  // namespace qtbo::runner
