#include "qtbo/lindblad.hpp"

#include <cmath>
#include <string>

namespace qtbo::lindblad {

using hilbert::cxd;
using hilbert::MatrixXcd;

LindbladModel make_model(Operator hamiltonian, std::vector<Operator> jumps,
                         double herm_tol) {
  if (!hilbert::is_hermitian(hamiltonian.entries, herm_tol))
    throw ConfigError("LindbladModel: Hamiltonian is not Hermitian within tolerance");
  for (const auto& l : jumps)
    if (!(l.shape == hamiltonian.shape))
      throw ShapeError("LindbladModel: jump operator shape differs from Hamiltonian");
  SpaceShape shape = hamiltonian.shape;
  return LindbladModel{std::move(hamiltonian), std::move(jumps), std::move(shape)};
}

namespace {

MatrixXcd dissipator_entries(const std::vector<MatrixXcd>& ls,
                             const std::vector<MatrixXcd>& ldls, const MatrixXcd& rho) {
  MatrixXcd out = MatrixXcd::Zero(rho.rows(), rho.cols());
  for (std::size_t k = 0; k < ls.size(); ++k) {
    out += ls[k] * rho * ls[k].adjoint();
    out -= 0.5 * (ldls[k] * rho + rho * ldls[k]);
  }
  return out;
}

MatrixXcd rhs_entries(const MatrixXcd& h, const std::vector<MatrixXcd>& ls,
                      const std::vector<MatrixXcd>& ldls, const MatrixXcd& rho) {
  MatrixXcd out = cxd(0, -1) * (h * rho - rho * h);
  out += dissipator_entries(ls, ldls, rho);
  return out;
}

std::vector<MatrixXcd> jump_entries(const LindbladModel& model) {
  std::vector<MatrixXcd> ls;
  ls.reserve(model.jumps.size());
  for (const auto& l : model.jumps) ls.push_back(l.entries);
  return ls;
}

std::vector<MatrixXcd> jump_squares(const std::vector<MatrixXcd>& ls) {
  std::vector<MatrixXcd> ldls;
  ldls.reserve(ls.size());
  for (const auto& l : ls) ldls.push_back(l.adjoint() * l);
  return ldls;
}

}  // namespace

Operator dissipator(const LindbladModel& model, const DensityMatrix& rho) {
  if (!(rho.shape == model.shape)) throw ShapeError("dissipator: shape mismatch");
  const auto ls = jump_entries(model);
  return Operator(model.shape, dissipator_entries(ls, jump_squares(ls), rho.entries));
}

Operator rhs(const LindbladModel& model, const DensityMatrix& rho) {
  if (!(rho.shape == model.shape)) throw ShapeError("rhs: shape mismatch");
  const auto ls = jump_entries(model);
  return Operator(model.shape,
                  rhs_entries(model.hamiltonian.entries, ls, jump_squares(ls), rho.entries));
}

DensitySeries evolve(const LindbladModel& model, const DensityMatrix& rho0, double dt,
                     double t_final, int sample_every) {
  if (!(dt > 0)) throw ConfigError("evolve: dt must be positive");
  if (!(t_final >= dt)) throw ConfigError("evolve: t_final must be at least dt");
  if (sample_every < 1) throw ConfigError("evolve: sample_every must be >= 1");
  if (!(rho0.shape == model.shape)) throw ShapeError("evolve: shape mismatch");

  const long n_steps = std::lround(t_final / dt);
  const MatrixXcd& h = model.hamiltonian.entries;
  const auto ls = jump_entries(model);
  const auto ldls = jump_squares(ls);

  DensitySeries out;
  out.times.reserve(n_steps / sample_every + 1);
  out.states.reserve(n_steps / sample_every + 1);

  MatrixXcd rho = rho0.entries;
  auto record = [&](long step) {
    rho = (0.5 * (rho + rho.adjoint())).eval();
    if (!rho.allFinite())
      throw NumericalError("evolve: non-finite density matrix at t = " +
                           std::to_string(step * dt) + " (reduce dt)");
    out.times.push_back(step * dt);
    out.states.emplace_back(model.shape, rho);
  };

  record(0);
  for (long step = 0; step < n_steps; ++step) {
    const MatrixXcd k1 = rhs_entries(h, ls, ldls, rho);
    const MatrixXcd k2 = rhs_entries(h, ls, ldls, (rho + 0.5 * dt * k1).eval());
    const MatrixXcd k3 = rhs_entries(h, ls, ldls, (rho + 0.5 * dt * k2).eval());
    const MatrixXcd k4 = rhs_entries(h, ls, ldls, (rho + dt * k3).eval());
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if ((step + 1) % sample_every == 0) record(step + 1);
  }
  if (!rho.allFinite()) throw NumericalError("evolve: non-finite density matrix at end");
  return out;
}

}  // namespace qtbo::lindblad
