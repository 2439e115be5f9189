#pragma once

// The two bundled systems with analytic Born-Oppenheimer data: an
// optomechanical Fabry-Perot cavity (fast- or slow-subsystem dissipation)
// and a spin-1/2 neutron traversing a helical magnetic field (complex-angle
// eigensystem, induced vector potentials, the Gamma validity sweep, and a
// semiclassical traversal drive).

#include <numbers>
#include <vector>

#include "qtbo/bo.hpp"
#include "qtbo/lindblad.hpp"
#include "qtbo/mcwf.hpp"

namespace qtbo::models {

using hilbert::cxd;
using hilbert::Operator;
using hilbert::StateVector;

// Cavity-mirror parameters in units of the mirror frequency Omega. The
// coupling g absorbs the zero-point length; gamma damps the cavity (fast
// variant), kappa the mirror (slow variant).
struct OptomechParams {
  double omega = 100.0;
  double capital_omega = 1.0;
  double g = 0.1;
  double gamma = 0.0;
  double kappa = 0.0;
  int n_a = 2;
  int n_b = 16;
};

// The realized model: the Lindblad system in the truncated Fock x Fock
// basis plus the analytic fast modes (cavity Fock branches) feeding
// bo::build_factorization. The variant selects which jump operator the
// model carries and which lifted slow Hamiltonian pairs with the branch
// energies.
struct OptomechModel {
  OptomechParams params;
  bo::Variant variant = bo::Variant::fast_dissipation;
  lindblad::LindbladModel lindblad;
  Operator slow_h;  // lifted to the full space, variant form
  std::vector<bo::FastMode> fast_modes;
};

OptomechModel optomech_model(const OptomechParams& p, bo::Variant variant);

// Analytic slow modes per cavity branch: displaced Fock states with
// displacement n_a g / Omega (fast variant, unitary) or n_a g / Omega_0
// with Omega_0 = Omega - i kappa/2 (slow variant, non-unitary; left modes
// from the inverse transform). Truncation is checked on the lower half of
// the ladder (eigen-residual <= 1e-8), where the closed form is reliable;
// modes near the cutoff carry truncation error by construction.
bo::SlowModeSet optomech_bo_modes(const OptomechParams& p, bo::Variant variant);

// Neutron parameters: theta is the field pitch angle, g the dimensionless
// spin relaxation rate, eps1/eps2 the dimensionless spatial scales
// (hbar^2/(muB M L^2) and hbar^2 k_z/(muB M L)), T the traversal time in
// units of pi hbar/muB. Energies are in units of muB, z in units of L.
struct NeutronParams {
  double theta = std::numbers::pi / 4;
  double g = 0.0;
  double eps1 = 1e-6;
  double eps2 = 2e-4;
  double T = 3.0;
};

// Closed-form eigendata of the 2x2 non-Hermitian spin Hamiltonian at z.
// Index convention: 0 = "+" branch (larger real energy), 1 = "-" branch.
// d1/d2 hold <psi_{n'}^L| d/dz |psi_n^R> and the second-derivative version;
// both are z-independent. a_plus/a_minus are the dimensionless induced
// vector potentials L*A_n = i<psi_n^L| d/dz |psi_n^R>.
struct NeutronEigensystem {
  cxd alpha;    // complex mixing angle, tan(alpha) = 4 sin(theta)/(4 cos(theta) - ig)
  double norm;  // N = sqrt(|cos(alpha/2)|^2 + |sin(alpha/2)|^2)
  cxd e_plus, e_minus;
  Eigen::Vector2cd right_plus, right_minus;
  Eigen::RowVector2cd left_plus, left_minus;  // bras, <L_m|R_n> = delta_mn
  cxd a_plus, a_minus;
  Eigen::Matrix2cd d1, d2;
};

Operator neutron_h(const NeutronParams& p, double z);     // Hermitian part
Operator neutron_heff(const NeutronParams& p, double z);  // with -(i/2)g decay
NeutronEigensystem neutron_eigensystem(const NeutronParams& p, double z);

// Gamma(g) ingredients: plane-wave slow modes at k = k_z make each branch a
// one-dimensional block with energy (eps1/2)(k_z L - A_n)^2 + E_n; the
// numerators are the derivative-coupling operators
// O_{n',n} = -(i eps2 d1 + (eps1/2) d2) evaluated branchwise.
struct GammaInputs {
  std::vector<std::vector<Operator>> numerators;
  bo::SlowModeSet modes;
};

GammaInputs neutron_gamma_inputs(const NeutronParams& p);
double neutron_gamma(const NeutronParams& p);

// Semiclassical traversal: the spin sees the field at z(t) = t/T with T
// converted to internal time units (hbar/muB), jump sqrt(g) sigma_-. Two
// interchangeable trajectory engines: direct RK4 with per-stage field
// refresh, and the zero-order branch propagation (phases
// exp(-i(E_n - zdot A_n) dt) between branch reprojections).
struct NeutronDrive {
  NeutronParams params;
  double t_final;  // traversal time in internal units (= T pi)
  StateVector initial;
  Operator polarization;  // sigma_z
  mcwf::TrajectoryEngine direct;
  mcwf::TrajectoryEngine adiabatic;
};

NeutronDrive neutron_drive_model(const NeutronParams& p);

}  // namespace qtbo::models
