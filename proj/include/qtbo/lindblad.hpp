#pragma once

// Open-system model definition and the dense reference integrator for the
// master equation
//   drho/dt = -i [H, rho] + (1/2) sum_k (2 L_k rho L_k^dag
//                                        - rho L_k^dag L_k - L_k^dag L_k rho)
// used as ground truth in method comparisons.

#include <vector>

#include "qtbo/hilbert.hpp"

namespace qtbo::lindblad {

using hilbert::DensityMatrix;
using hilbert::Operator;
using hilbert::SpaceShape;

struct LindbladModel {
  Operator hamiltonian;          // Hermitian
  std::vector<Operator> jumps;   // the L_k
  SpaceShape shape;
};

// Validates Hermiticity of H (within herm_tol) and shape agreement.
LindbladModel make_model(Operator hamiltonian, std::vector<Operator> jumps,
                         double herm_tol = 1e-10);

// The dissipator L rho alone; traceless and Hermiticity-preserving.
Operator dissipator(const LindbladModel& model, const DensityMatrix& rho);

// Full right-hand side -i[H, rho] + L rho.
Operator rhs(const LindbladModel& model, const DensityMatrix& rho);

struct DensitySeries {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
};

// Classic fixed-step RK4. Samples (including t = 0) are taken every
// sample_every steps; the carried state is re-Hermitized at each sample
// point to suppress roundoff drift. Throws NumericalError on divergence.
DensitySeries evolve(const LindbladModel& model, const DensityMatrix& rho0, double dt,
                     double t_final, int sample_every);

}  // namespace qtbo::lindblad
