#include "qtbo/models.hpp"

#include <cmath>
#include <complex>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>

#include <unsupported/Eigen/MatrixFunctions>

#include "qtbo/errors.hpp"

namespace qtbo::models {

using hilbert::MatrixXcd;
using hilbert::SpaceShape;
using hilbert::VectorXcd;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cxd kI{0.0, 1.0};

void check_optomech(const OptomechParams& p) {
  if (p.n_a < 2 || p.n_b < 2)
    throw ConfigError("optomech: Fock cutoffs must be at least 2 (n_a=" +
                      std::to_string(p.n_a) + ", n_b=" + std::to_string(p.n_b) + ")");
  if (p.capital_omega <= 0.0 || p.omega <= 0.0)
    throw ConfigError("optomech: frequencies must be positive");
  if (p.gamma < 0.0 || p.kappa < 0.0)
    throw ConfigError("optomech: damping rates must be non-negative");
  if (p.omega / p.capital_omega < 10.0)
    std::cerr << "warning: omega/Omega = " << p.omega / p.capital_omega
              << " < 10; the fast/slow separation is marginal\n";
}

// Mirror-space building blocks (the slow factor).
struct MirrorOps {
  SpaceShape shape;
  MatrixXcd id, num, x;
};

MirrorOps mirror_ops(int n_b) {
  MirrorOps m{SpaceShape({n_b}), MatrixXcd::Identity(n_b, n_b),
              hilbert::number(n_b).entries,
              hilbert::annihilation(n_b).entries + hilbert::creation(n_b).entries};
  return m;
}

// Branch energy operator on the mirror space for cavity occupation n.
Operator branch_energy(const OptomechParams& p, bo::Variant variant, int n,
                       const MirrorOps& m) {
  cxd prefactor = variant == bo::Variant::fast_dissipation
                      ? cxd(p.omega, -0.5 * p.gamma)
                      : cxd(p.omega, 0.0);
  MatrixXcd e = prefactor * static_cast<double>(n) * m.id -
                p.g * static_cast<double>(n) * m.x;
  return Operator(m.shape, e);
}

// The lifted slow Hamiltonian. Slow dissipation folds -(i kappa/2) b^dag b
// into it, which regroups as Omega_0 b^dag b + Omega/2 with
// Omega_0 = Omega - i kappa/2; the zero-point constant stays Omega/2.
Operator lifted_slow_h(const OptomechParams& p, bo::Variant variant,
                       const MirrorOps& m) {
  MatrixXcd hs;
  if (variant == bo::Variant::fast_dissipation) {
    hs = p.capital_omega * (m.num + 0.5 * m.id);
  } else {
    cxd omega0(p.capital_omega, -0.5 * p.kappa);
    hs = omega0 * m.num + cxd(0.5 * p.capital_omega, 0.0) * m.id;
  }
  Operator ia = hilbert::identity(SpaceShape({p.n_a}));
  return hilbert::tensor(ia, Operator(m.shape, hs));
}

}  // namespace

OptomechModel optomech_model(const OptomechParams& p, bo::Variant variant) {
  check_optomech(p);
  MirrorOps m = mirror_ops(p.n_b);
  SpaceShape shape({p.n_a, p.n_b});
  Operator ia = hilbert::identity(SpaceShape({p.n_a}));
  Operator ib = hilbert::identity(m.shape);

  Operator num_a = hilbert::tensor(hilbert::number(p.n_a), ib);
  Operator num_b = hilbert::tensor(ia, hilbert::number(p.n_b));
  Operator x_b = hilbert::tensor(ia, Operator(m.shape, m.x));
  MatrixXcd h = p.omega * num_a.entries +
                p.capital_omega *
                    (num_b.entries + 0.5 * MatrixXcd::Identity(shape.total_dim(), shape.total_dim())) -
                p.g * (num_a.entries * x_b.entries);

  std::vector<Operator> jumps;
  if (variant == bo::Variant::fast_dissipation && p.gamma > 0.0)
    jumps.push_back(Operator(
        shape, std::sqrt(p.gamma) * hilbert::tensor(hilbert::annihilation(p.n_a), ib).entries));
  if (variant == bo::Variant::slow_dissipation && p.kappa > 0.0)
    jumps.push_back(Operator(
        shape, std::sqrt(p.kappa) * hilbert::tensor(ia, hilbert::annihilation(p.n_b)).entries));

  OptomechModel model;
  model.params = p;
  model.variant = variant;
  model.lindblad = lindblad::make_model(Operator(shape, h), std::move(jumps));
  model.slow_h = lifted_slow_h(p, variant, m);

  // Cavity Fock branches: embed_n maps the mirror space onto the |n> slice.
  for (int n = 0; n < p.n_a; ++n) {
    bo::FastMode mode;
    mode.index = n;
    mode.embed = MatrixXcd::Zero(shape.total_dim(), p.n_b);
    for (int j = 0; j < p.n_b; ++j) mode.embed(n * p.n_b + j, j) = 1.0;
    mode.project = mode.embed.adjoint();
    mode.energy_op = branch_energy(p, variant, n, m);
    model.fast_modes.push_back(std::move(mode));
  }
  return model;
}

bo::SlowModeSet optomech_bo_modes(const OptomechParams& p, bo::Variant variant) {
  check_optomech(p);
  MirrorOps m = mirror_ops(p.n_b);
  MatrixXcd ladder = hilbert::creation(p.n_b).entries - hilbert::annihilation(p.n_b).entries;

  cxd omega0 = variant == bo::Variant::fast_dissipation
                   ? cxd(p.capital_omega, 0.0)
                   : cxd(p.capital_omega, -0.5 * p.kappa);
  cxd cavity = variant == bo::Variant::fast_dissipation ? cxd(p.omega, -0.5 * p.gamma)
                                                        : cxd(p.omega, 0.0);

  bo::SlowModeSet set;
  for (int n = 0; n < p.n_a; ++n) {
    cxd beta = static_cast<double>(n) * p.g / omega0;
    MatrixXcd s = (beta * ladder).exp();
    MatrixXcd s_inv = (-beta * ladder).exp();

    bo::BlockModes block;
    block.rights = MatrixXcd(p.n_b, p.n_b);
    block.lefts = MatrixXcd(p.n_b, p.n_b);
    block.eigenvalues = VectorXcd(p.n_b);
    cxd shift = static_cast<double>(n) * cavity -
                static_cast<double>(n) * static_cast<double>(n) * p.g * p.g / omega0;
    for (int k = 0; k < p.n_b; ++k) {
      double s_k = s.col(k).norm();
      block.rights.col(k) = s.col(k) / s_k;
      block.lefts.row(k) = s_k * s_inv.row(k);
      block.eigenvalues(k) =
          omega0 * static_cast<double>(k) + 0.5 * p.capital_omega + shift;
    }

    // Displaced-ladder closed form is only trusted away from the Fock
    // cutoff: verify it on the lower half of the ladder.
    MatrixXcd b = omega0 * m.num + 0.5 * p.capital_omega * m.id +
                  static_cast<double>(n) * cavity * m.id -
                  p.g * static_cast<double>(n) * m.x;
    for (int k = 0; k < p.n_b / 2; ++k) {
      double residual =
          (b * block.rights.col(k) - block.eigenvalues(k) * block.rights.col(k)).norm();
      if (residual > 1e-8) {
        std::ostringstream msg;
        msg << "optomech BO modes: truncation residual " << residual << " at branch "
            << n << ", mode " << k << " exceeds 1e-8; increase n_b";
        throw NumericalError(msg.str());
      }
    }
    set.blocks.push_back(std::move(block));
  }
  return set;
}

namespace {

void check_neutron(const NeutronParams& p) {
  if (!(p.theta >= 0.0 && p.theta <= kPi))
    throw ConfigError("neutron: theta must lie in [0, pi]");
  if (p.g < 0.0) throw ConfigError("neutron: g must be non-negative");
  if (p.eps1 <= 0.0 || p.eps2 <= 0.0)
    throw ConfigError("neutron: eps1 and eps2 must be positive");
  if (p.T <= 0.0) throw ConfigError("neutron: traversal time T must be positive");
}

const SpaceShape kSpin({2});

}  // namespace

Operator neutron_h(const NeutronParams& p, double z) {
  check_neutron(p);
  double phi = 2.0 * kPi * z;
  Eigen::Matrix2cd h;
  h(0, 0) = std::cos(p.theta);
  h(0, 1) = std::sin(p.theta) * std::exp(-kI * phi);
  h(1, 0) = std::sin(p.theta) * std::exp(kI * phi);
  h(1, 1) = -std::cos(p.theta);
  return Operator(kSpin, h);
}

Operator neutron_heff(const NeutronParams& p, double z) {
  Operator h = neutron_h(p, z);
  h.entries(0, 0) -= kI * (0.5 * p.g);
  return h;
}

NeutronEigensystem neutron_eigensystem(const NeutronParams& p, double z) {
  check_neutron(p);
  NeutronEigensystem es;

  cxd rc = std::sqrt(cxd(16.0 - p.g * p.g, -8.0 * p.g * std::cos(p.theta)));
  if (std::abs(rc) < 1e-6)
    throw DegeneracyError("neutron: branch energies coalesce (theta=" +
                          std::to_string(p.theta) + ", g=" + std::to_string(p.g) +
                          "); the branch expansion is undefined");

  es.e_plus = cxd(0.0, -0.25 * p.g) + 0.25 * rc;
  es.e_minus = cxd(0.0, -0.25 * p.g) - 0.25 * rc;

  cxd cosa = (4.0 * std::cos(p.theta) - kI * p.g) / rc;
  cxd sina = 4.0 * std::sin(p.theta) / rc;
  es.alpha = std::acos(cosa);

  // Half-angle split chosen for branch stability near theta = 0 and pi.
  cxd ch, sh;
  if (std::abs(1.0 + cosa) >= std::abs(1.0 - cosa)) {
    ch = std::sqrt(0.5 * (1.0 + cosa));
    sh = sina / (2.0 * ch);
  } else {
    sh = std::sqrt(0.5 * (1.0 - cosa));
    ch = sina / (2.0 * sh);
  }
  es.norm = std::sqrt(std::norm(ch) + std::norm(sh));

  cxd phase = std::exp(kI * (2.0 * kPi * z));
  es.right_plus << ch / es.norm, sh * phase / es.norm;
  es.right_minus << sh / es.norm, -ch * phase / es.norm;
  es.left_plus << es.norm * ch, es.norm * sh / phase;
  es.left_minus << es.norm * sh, -es.norm * ch / phase;

  // z-independent derivative elements; sh2/ch2 are the complex half-angle
  // squares, not moduli.
  cxd sh2 = 0.5 * (1.0 - cosa);
  cxd ch2 = 0.5 * (1.0 + cosa);
  es.d1(0, 0) = kI * (2.0 * kPi) * sh2;
  es.d1(1, 1) = kI * (2.0 * kPi) * ch2;
  es.d1(0, 1) = -kI * kPi * sina;
  es.d1(1, 0) = -kI * kPi * sina;
  es.d2(0, 0) = -4.0 * kPi * kPi * sh2;
  es.d2(1, 1) = -4.0 * kPi * kPi * ch2;
  es.d2(0, 1) = 2.0 * kPi * kPi * sina;
  es.d2(1, 0) = 2.0 * kPi * kPi * sina;

  es.a_plus = kI * es.d1(0, 0);
  es.a_minus = kI * es.d1(1, 1);
  return es;
}

GammaInputs neutron_gamma_inputs(const NeutronParams& p) {
  NeutronEigensystem es = neutron_eigensystem(p, 0.0);
  double kl = p.eps2 / p.eps1;  // dimensionless k_z L

  auto plane_wave_energy = [&](cxd a_n, cxd e_n) {
    cxd shifted = cxd(kl, 0.0) - a_n;
    return 0.5 * p.eps1 * shifted * shifted + e_n;
  };

  GammaInputs inputs;
  const SpaceShape one({1});
  Eigen::Matrix2cd o = -(kI * p.eps2 * es.d1 + 0.5 * p.eps1 * es.d2);
  inputs.numerators.assign(2, std::vector<Operator>());
  for (int np = 0; np < 2; ++np)
    for (int n = 0; n < 2; ++n) {
      MatrixXcd v = MatrixXcd::Zero(1, 1);
      if (np != n) v(0, 0) = o(np, n);
      inputs.numerators[np].push_back(Operator(one, v));
    }

  auto block_for = [](cxd energy) {
    bo::BlockModes b;
    b.rights = MatrixXcd::Identity(1, 1);
    b.lefts = MatrixXcd::Identity(1, 1);
    b.eigenvalues = VectorXcd::Constant(1, energy);
    return b;
  };
  inputs.modes.blocks.push_back(block_for(plane_wave_energy(es.a_plus, es.e_plus)));
  inputs.modes.blocks.push_back(block_for(plane_wave_energy(es.a_minus, es.e_minus)));
  return inputs;
}

double neutron_gamma(const NeutronParams& p) {
  GammaInputs inputs = neutron_gamma_inputs(p);
  return bo::gamma_measure(inputs.numerators, inputs.modes);
}

NeutronDrive neutron_drive_model(const NeutronParams& p) {
  check_neutron(p);
  NeutronDrive drive;
  drive.params = p;
  drive.t_final = p.T * kPi;
  drive.initial = hilbert::fock(2, 0);
  drive.polarization = hilbert::pauli_z();

  std::vector<Operator> jumps;
  if (p.g > 0.0)
    jumps.push_back(
        Operator(kSpin, std::sqrt(p.g) * hilbert::sigma_minus().entries));

  double t_nat = drive.t_final;
  drive.direct = mcwf::direct_engine(
      [p, t_nat](double t) { return neutron_h(p, t / t_nat); }, jumps);

  // Zero-order branch propagation: project on the local branches, advance
  // each amplitude with phase E_n - zdot A_n, reassemble at the new z.
  double zdot = 1.0 / t_nat;
  drive.adiabatic.shape = kSpin;
  drive.adiabatic.jumps = jumps;
  drive.adiabatic.advance = [p, t_nat, zdot](const VectorXcd& psi, double t,
                                             double dt) -> VectorXcd {
    NeutronEigensystem e0 = neutron_eigensystem(p, t / t_nat);
    NeutronEigensystem e1 = neutron_eigensystem(p, (t + dt) / t_nat);
    Eigen::Vector2cd v(psi(0), psi(1));
    cxd cp = (e0.left_plus * v)(0);
    cxd cm = (e0.left_minus * v)(0);
    cp *= std::exp(-kI * (e0.e_plus - zdot * e0.a_plus) * dt);
    cm *= std::exp(-kI * (e0.e_minus - zdot * e0.a_minus) * dt);
    Eigen::Vector2cd out = cp * e1.right_plus + cm * e1.right_minus;
    return VectorXcd(out);
  };
  return drive;
}

}  // namespace qtbo::models
