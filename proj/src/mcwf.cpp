#include "qtbo/mcwf.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "qtbo/errors.hpp"

namespace qtbo::mcwf {

namespace {

void check_state_shape(const hilbert::SpaceShape& shape, const StateVector& state,
                       const char* where) {
  if (!(state.shape == shape) ||
      state.amplitudes.size() != static_cast<Eigen::Index>(shape.total_dim()))
    throw ShapeError(std::string(where) + ": state does not match model space");
}

Eigen::MatrixXcd jump_sum(const std::vector<Operator>& jumps, int dim) {
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& l : jumps) acc += l.entries.adjoint() * l.entries;
  return acc;
}

// One RK4 step of d|psi>/dt = -i H(t) |psi| with per-stage refresh.
Eigen::VectorXcd rk4_schrodinger(const std::function<Eigen::MatrixXcd(double)>& h,
                                 const Eigen::VectorXcd& psi, double t, double dt) {
  const hilbert::cxd mi(0.0, -1.0);
  Eigen::VectorXcd k1 = mi * (h(t) * psi);
  Eigen::VectorXcd k2 = mi * (h(t + 0.5 * dt) * (psi + 0.5 * dt * k1));
  Eigen::VectorXcd k3 = mi * (h(t + 0.5 * dt) * (psi + 0.5 * dt * k2));
  Eigen::VectorXcd k4 = mi * (h(t + dt) * (psi + dt * k3));
  return psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::vector<double> jump_probabilities_raw(const std::vector<Operator>& jumps,
                                           const Eigen::VectorXcd& psi, double dt) {
  std::vector<double> dp(jumps.size());
  double total = 0.0;
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    dp[k] = dt * (jumps[k].entries * psi).squaredNorm();
    total += dp[k];
  }
  if (total > 0.1)
    throw NumericalError("jump probability per step " + std::to_string(total) +
                         " exceeds 0.1; reduce dt");
  return dp;
}

// Shared stepping core. A single uniform epsilon decides the branch: if it
// falls inside the cumulative dp intervals, the corresponding jump replaces
// the step; otherwise the no-jump propagator advances the state and the
// result is renormalized.
std::pair<Eigen::VectorXcd, std::optional<JumpRecord>> step_core(
    const std::vector<Operator>& jumps, const PropagatorFn& advance,
    const Eigen::VectorXcd& psi, double t, double dt, double epsilon) {
  const auto dp = jump_probabilities_raw(jumps, psi, dt);
  const double total = std::accumulate(dp.begin(), dp.end(), 0.0);
  if (total > 0.0 && epsilon <= total) {
    double cum = 0.0;
    int channel = -1;
    for (std::size_t k = 0; k < dp.size(); ++k) {
      cum += dp[k];
      if (dp[k] > 0.0 && epsilon <= cum) {
        channel = static_cast<int>(k);
        break;
      }
    }
    if (channel < 0) {
      // epsilon landed on trailing zero-probability channels; take the last
      // active one.
      for (std::size_t k = dp.size(); k-- > 0;)
        if (dp[k] > 0.0) {
          channel = static_cast<int>(k);
          break;
        }
    }
    Eigen::VectorXcd phi = jumps[channel].entries * psi;
    const double nrm = phi.norm();
    if (!(nrm > 0.0))
      throw NumericalError("jump channel selected with vanishing amplitude");
    return {phi / nrm, JumpRecord{t + dt, channel}};
  }
  Eigen::VectorXcd next = advance(psi, t, dt);
  const double nrm = next.norm();
  if (!(nrm > 0.0) || !next.allFinite())
    throw NumericalError("no-jump propagation produced a degenerate state; reduce dt");
  return {next / nrm, std::nullopt};
}

}  // namespace

EffectiveHamiltonian effective_hamiltonian(const lindblad::LindbladModel& model) {
  const int dim = model.shape.total_dim();
  EffectiveHamiltonian heff;
  heff.entries.shape = model.shape;
  heff.entries.entries =
      model.hamiltonian.entries - hilbert::cxd(0.0, 0.5) * jump_sum(model.jumps, dim);
  return heff;
}

TrajectoryEngine direct_engine(const lindblad::LindbladModel& model) {
  TrajectoryEngine engine;
  engine.shape = model.shape;
  engine.jumps = model.jumps;
  Eigen::MatrixXcd heff = effective_hamiltonian(model).entries.entries;
  engine.advance = [heff](const Eigen::VectorXcd& psi, double t, double dt) {
    return rk4_schrodinger([&](double) -> Eigen::MatrixXcd { return heff; }, psi, t, dt);
  };
  return engine;
}

TrajectoryEngine direct_engine(std::function<Operator(double)> hamiltonian,
                               std::vector<Operator> jumps) {
  if (!hamiltonian) throw ConfigError("direct_engine: null Hamiltonian function");
  Operator probe = hamiltonian(0.0);
  TrajectoryEngine engine;
  engine.shape = probe.shape;
  const int dim = engine.shape.total_dim();
  for (const auto& l : jumps)
    if (!(l.shape == engine.shape))
      throw ShapeError("direct_engine: jump operator space mismatch");
  Eigen::MatrixXcd decay = hilbert::cxd(0.0, -0.5) * jump_sum(jumps, dim);
  engine.jumps = std::move(jumps);
  engine.advance = [hamiltonian = std::move(hamiltonian), decay](
                       const Eigen::VectorXcd& psi, double t, double dt) {
    auto heff = [&](double s) -> Eigen::MatrixXcd {
      return hamiltonian(s).entries + decay;
    };
    return rk4_schrodinger(heff, psi, t, dt);
  };
  return engine;
}

std::vector<double> jump_probabilities(const lindblad::LindbladModel& model,
                                       const StateVector& state, double dt) {
  check_state_shape(model.shape, state, "jump_probabilities");
  if (!(dt > 0.0)) throw ConfigError("jump_probabilities: dt must be positive");
  return jump_probabilities_raw(model.jumps, state.amplitudes, dt);
}

StateVector apply_jump(const lindblad::LindbladModel& model, const StateVector& state,
                       int k) {
  check_state_shape(model.shape, state, "apply_jump");
  if (k < 0 || k >= static_cast<int>(model.jumps.size()))
    throw ConfigError("apply_jump: channel index out of range");
  Eigen::VectorXcd phi = model.jumps[k].entries * state.amplitudes;
  const double nrm = phi.norm();
  if (!(nrm > 0.0))
    throw NumericalError("apply_jump: jump amplitude vanishes on this state");
  return StateVector{state.shape, phi / nrm};
}

StateVector no_jump_step(const EffectiveHamiltonian& heff, const StateVector& state,
                         double dt) {
  check_state_shape(heff.entries.shape, state, "no_jump_step");
  Eigen::VectorXcd next = rk4_schrodinger(
      [&](double) -> Eigen::MatrixXcd { return heff.entries.entries; },
      state.amplitudes, 0.0, dt);
  const double nrm = next.norm();
  if (!(nrm > 0.0) || !next.allFinite())
    throw NumericalError("no_jump_step: propagation produced a degenerate state");
  return StateVector{state.shape, next / nrm};
}

std::pair<StateVector, std::optional<JumpRecord>> step(
    const lindblad::LindbladModel& model, const EffectiveHamiltonian& heff,
    const StateVector& state, double dt, double epsilon, double t) {
  check_state_shape(model.shape, state, "step");
  if (!(dt > 0.0)) throw ConfigError("step: dt must be positive");
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw ConfigError("step: epsilon must lie in [0, 1)");
  PropagatorFn advance = [&](const Eigen::VectorXcd& psi, double t0, double h) {
    return rk4_schrodinger(
        [&](double) -> Eigen::MatrixXcd { return heff.entries.entries; }, psi, t0, h);
  };
  auto [next, jump] = step_core(model.jumps, advance, state.amplitudes, t, dt, epsilon);
  return {StateVector{state.shape, std::move(next)}, jump};
}

std::pair<StateVector, std::optional<JumpRecord>> step(
    const lindblad::LindbladModel& model, const EffectiveHamiltonian& heff,
    const StateVector& state, double dt, std::mt19937_64& rng, double t) {
  return step(model, heff, state, dt, uniform_unit(rng), t);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 trajectory_rng(std::uint64_t base_seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(base_seed + index));
}

double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

namespace {

void check_run_config(const TrajectoryConfig& config) {
  if (!(config.dt > 0.0)) throw ConfigError("trajectory config: dt must be positive");
  if (!(config.t_final >= config.dt))
    throw ConfigError("trajectory config: t_final must be at least dt");
  if (config.sample_every < 1)
    throw ConfigError("trajectory config: sample_every must be >= 1");
  if (config.n_traj < 1) throw ConfigError("trajectory config: n_traj must be >= 1");
}

// Core loop shared by both run_trajectory overloads. on_sample(step, psi) is
// called at step 0 and every sample_every-th step thereafter.
template <class OnSample>
std::vector<JumpRecord> trajectory_loop(const TrajectoryEngine& engine,
                                        const TrajectoryConfig& config,
                                        const StateVector& psi0, int traj_index,
                                        OnSample&& on_sample) {
  check_run_config(config);
  check_state_shape(engine.shape, psi0, "run_trajectory");
  if (!engine.advance) throw ConfigError("run_trajectory: engine has no propagator");
  const double nrm0 = psi0.amplitudes.norm();
  if (!(nrm0 > 0.0)) throw ConfigError("run_trajectory: initial state has zero norm");

  auto rng = trajectory_rng(config.base_seed, static_cast<std::uint64_t>(traj_index));
  const long n_steps = std::lround(config.t_final / config.dt);
  Eigen::VectorXcd psi = psi0.amplitudes / nrm0;
  std::vector<JumpRecord> jumps;

  on_sample(0L, psi);
  for (long s = 0; s < n_steps; ++s) {
    const double t = static_cast<double>(s) * config.dt;
    const double eps = uniform_unit(rng);
    auto [next, jump] = step_core(engine.jumps, engine.advance, psi, t, config.dt, eps);
    psi = std::move(next);
    if (jump) jumps.push_back(*jump);
    if ((s + 1) % config.sample_every == 0) on_sample(s + 1, psi);
  }
  return jumps;
}

}  // namespace

TrajectoryResult run_trajectory(const TrajectoryEngine& engine,
                                const TrajectoryConfig& config, const StateVector& psi0,
                                int traj_index) {
  TrajectoryResult out;
  out.jumps = trajectory_loop(engine, config, psi0, traj_index,
                              [&](long s, const Eigen::VectorXcd& psi) {
                                out.times.push_back(static_cast<double>(s) * config.dt);
                                out.states.push_back(psi);
                              });
  return out;
}

ObservableRun run_trajectory(const TrajectoryEngine& engine, const TrajectoryConfig& config,
                             const StateVector& psi0,
                             const std::vector<Operator>& observables, int traj_index) {
  for (const auto& obs : observables)
    if (!(obs.shape == engine.shape))
      throw ShapeError("run_trajectory: observable space mismatch");
  ObservableRun out;
  out.values.resize(observables.size());
  out.jumps = trajectory_loop(engine, config, psi0, traj_index,
                              [&](long s, const Eigen::VectorXcd& psi) {
                                out.times.push_back(static_cast<double>(s) * config.dt);
                                for (std::size_t i = 0; i < observables.size(); ++i)
                                  out.values[i].push_back(
                                      psi.dot(observables[i].entries * psi));
                              });
  return out;
}

EnsembleResult ensemble_average(const TrajectoryEngine& engine,
                                const TrajectoryConfig& config, const StateVector& psi0) {
  check_run_config(config);
  const int n_traj = config.n_traj;
  std::vector<std::vector<Eigen::VectorXcd>> states(n_traj);
  std::vector<std::vector<JumpRecord>> jumps(n_traj);

  int workers = config.workers > 0
                    ? config.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, n_traj);

  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_traj) return;
      try {
        TrajectoryResult r = run_trajectory(engine, config, psi0, i);
        states[i] = std::move(r.states);
        jumps[i] = std::move(r.jumps);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n_traj);
        return;
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  // Fixed-order reduction: accumulate trajectory 0, 1, ... regardless of
  // which worker produced each, so the ensemble is bitwise reproducible for
  // any worker count.
  const long n_steps = std::lround(config.t_final / config.dt);
  const std::size_t n_samples =
      static_cast<std::size_t>(n_steps / config.sample_every) + 1;
  const int dim = engine.shape.total_dim();
  EnsembleResult out;
  out.times.reserve(n_samples);
  for (std::size_t j = 0; j < n_samples; ++j)
    out.times.push_back(static_cast<double>(j) * config.sample_every * config.dt);
  std::vector<Eigen::MatrixXcd> acc(n_samples, Eigen::MatrixXcd::Zero(dim, dim));
  for (int i = 0; i < n_traj; ++i) {
    if (states[i].size() != n_samples)
      throw NumericalError("ensemble_average: inconsistent sample count");
    for (std::size_t j = 0; j < n_samples; ++j)
      acc[j].noalias() += states[i][j] * states[i][j].adjoint();
  }
  out.jumps_per_channel.assign(engine.jumps.size(), 0);
  for (int i = 0; i < n_traj; ++i)
    for (const auto& rec : jumps[i]) {
      ++out.total_jumps;
      ++out.jumps_per_channel[static_cast<std::size_t>(rec.channel)];
    }
  out.states.reserve(n_samples);
  for (std::size_t j = 0; j < n_samples; ++j)
    out.states.push_back(DensityMatrix{engine.shape, acc[j] / static_cast<double>(n_traj)});
  return out;
}

namespace {

TrajectoryEngine engine_from_model(const lindblad::LindbladModel& model,
                                   const TrajectoryConfig& config) {
  if (config.propagator != PropagatorKind::direct_rk4)
    throw ConfigError(
        "bo_spectral propagation needs a spectral engine, not a bare model");
  return direct_engine(model);
}

}  // namespace

TrajectoryResult run_trajectory(const lindblad::LindbladModel& model,
                                const TrajectoryConfig& config, const StateVector& psi0,
                                int traj_index) {
  return run_trajectory(engine_from_model(model, config), config, psi0, traj_index);
}

ObservableRun run_trajectory(const lindblad::LindbladModel& model,
                             const TrajectoryConfig& config, const StateVector& psi0,
                             const std::vector<Operator>& observables, int traj_index) {
  return run_trajectory(engine_from_model(model, config), config, psi0, observables,
                        traj_index);
}

EnsembleResult ensemble_average(const lindblad::LindbladModel& model,
                                const TrajectoryConfig& config, const StateVector& psi0) {
  return ensemble_average(engine_from_model(model, config), config, psi0);
}

}  // namespace qtbo::mcwf
