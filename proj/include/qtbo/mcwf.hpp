#pragma once

// Quantum-trajectory engine: jump sampling, non-Hermitian no-jump
// propagation, deterministic seeded ensembles, and density-matrix
// reconstruction by trajectory averaging.
//
// Stepping scheme: each step draws exactly one unit-interval uniform
// epsilon (whether or not a jump is possible). With dp_k = dt <L_k^dag L_k>,
// epsilon <= sum dp selects a channel by cumulative intervals and the jump
// replaces the step; otherwise the state advances under
// H_eff = H - (i/2) sum L_k^dag L_k and is renormalized.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "qtbo/lindblad.hpp"

namespace qtbo::mcwf {

using hilbert::DensityMatrix;
using hilbert::Operator;
using hilbert::StateVector;

struct EffectiveHamiltonian {
  Operator entries;  // non-Hermitian in general
};

EffectiveHamiltonian effective_hamiltonian(const lindblad::LindbladModel& model);

enum class PropagatorKind { direct_rk4, bo_spectral };

struct TrajectoryConfig {
  double dt = 1e-3;
  double t_final = 1.0;
  int n_traj = 1;
  std::uint64_t base_seed = 0;
  PropagatorKind propagator = PropagatorKind::direct_rk4;
  int sample_every = 100;
  int workers = 0;  // 0 = hardware concurrency
};

struct JumpRecord {
  double time;
  int channel;
};

// Advances a normalized state by one no-jump step of dt starting at time t.
// The result need not be normalized; the engine renormalizes and the norm
// loss is consistent with the dp accounting.
using PropagatorFn =
    std::function<Eigen::VectorXcd(const Eigen::VectorXcd&, double t, double dt)>;

// A model realized for trajectory stepping: jump operators plus a no-jump
// propagator (direct RK4 on H_eff, a BO spectral step, or a model-supplied
// stepper).
struct TrajectoryEngine {
  hilbert::SpaceShape shape;
  std::vector<Operator> jumps;
  PropagatorFn advance;
};

// RK4 on the static H_eff of the model.
TrajectoryEngine direct_engine(const lindblad::LindbladModel& model);

// RK4 with per-stage Hamiltonian refresh for semiclassically driven models.
TrajectoryEngine direct_engine(std::function<Operator(double)> hamiltonian,
                               std::vector<Operator> jumps);

// dp_k = dt <L_k^dag L_k>. Throws NumericalError when sum dp > 0.1 (the
// step-size sanity bound); the caller must reduce dt.
std::vector<double> jump_probabilities(const lindblad::LindbladModel& model,
                                       const StateVector& state, double dt);

// |phi_k> = L_k |phi> / ||L_k |phi>||.
StateVector apply_jump(const lindblad::LindbladModel& model, const StateVector& state,
                       int k);

// One RK4 step of i d|psi>/dt = H_eff |psi>, then renormalized.
StateVector no_jump_step(const EffectiveHamiltonian& heff, const StateVector& state,
                         double dt);

// One full step with a caller-supplied epsilon (for tests) or an RNG.
std::pair<StateVector, std::optional<JumpRecord>> step(
    const lindblad::LindbladModel& model, const EffectiveHamiltonian& heff,
    const StateVector& state, double dt, double epsilon, double t = 0.0);
std::pair<StateVector, std::optional<JumpRecord>> step(
    const lindblad::LindbladModel& model, const EffectiveHamiltonian& heff,
    const StateVector& state, double dt, std::mt19937_64& rng, double t = 0.0);

// Seeding: one independent mt19937_64 stream per trajectory, derived from
// (base_seed, index) through the splitmix64 finalizer so that nearby seeds
// decorrelate. Uniforms come from raw 64-bit draws, not
// std::uniform_real_distribution, for cross-platform reproducibility.
std::uint64_t splitmix64(std::uint64_t x);
std::mt19937_64 trajectory_rng(std::uint64_t base_seed, std::uint64_t index);
double uniform_unit(std::mt19937_64& rng);  // in [0, 1)

struct TrajectoryResult {
  std::vector<double> times;
  std::vector<Eigen::VectorXcd> states;  // normalized samples
  std::vector<JumpRecord> jumps;
};

TrajectoryResult run_trajectory(const TrajectoryEngine& engine,
                                const TrajectoryConfig& config, const StateVector& psi0,
                                int traj_index = 0);

struct ObservableRun {
  std::vector<double> times;
  // values[i][j] = expectation of observable i at sample j
  std::vector<std::vector<hilbert::cxd>> values;
  std::vector<JumpRecord> jumps;
};

ObservableRun run_trajectory(const TrajectoryEngine& engine, const TrajectoryConfig& config,
                             const StateVector& psi0,
                             const std::vector<Operator>& observables, int traj_index = 0);

struct EnsembleResult {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  std::size_t total_jumps = 0;
  std::vector<std::size_t> jumps_per_channel;
};

// rho(t) = (1/N) sum_i |psi_i(t)><psi_i(t)|. Trajectories are independent
// work units; every trajectory owns its RNG stream and sample buffer, and
// the final reduction runs in fixed index order, so results are independent
// of the worker count.
EnsembleResult ensemble_average(const TrajectoryEngine& engine,
                                const TrajectoryConfig& config, const StateVector& psi0);

// Convenience overloads that realize the model with the configured
// propagator. Only direct_rk4 can be built from a bare Lindblad model; a
// bo_spectral propagator needs the factorization and is wired by the caller
// through a TrajectoryEngine.
TrajectoryResult run_trajectory(const lindblad::LindbladModel& model,
                                const TrajectoryConfig& config, const StateVector& psi0,
                                int traj_index = 0);
ObservableRun run_trajectory(const lindblad::LindbladModel& model,
                             const TrajectoryConfig& config, const StateVector& psi0,
                             const std::vector<Operator>& observables,
                             int traj_index = 0);
EnsembleResult ensemble_average(const lindblad::LindbladModel& model,
                                const TrajectoryConfig& config, const StateVector& psi0);

}  // namespace qtbo::mcwf
