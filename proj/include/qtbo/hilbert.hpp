#pragma once

// Dense complex linear algebra with composite-Hilbert-space bookkeeping:
// tensor products, adjoints, partial trace/transpose, bosonic and spin
// operators. All values are immutable after construction and all operations
// are pure, so everything here is safe to share across threads.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "qtbo/errors.hpp"

namespace qtbo::hilbert {

using cxd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

// Ordered list of tensor-factor dimensions. Factor 0 is the slowest
// (leftmost) Kronecker index.
struct SpaceShape {
  std::vector<int> factor_dims;

  SpaceShape() = default;
  explicit SpaceShape(std::vector<int> dims);

  int total_dim() const;
  int factors() const { return static_cast<int>(factor_dims.size()); }
  bool operator==(const SpaceShape&) const = default;
};

struct Operator {
  SpaceShape shape;
  MatrixXcd entries;

  Operator() = default;
  Operator(SpaceShape s, MatrixXcd m);
  int dim() const { return static_cast<int>(entries.rows()); }
};

struct StateVector {
  SpaceShape shape;
  VectorXcd amplitudes;

  StateVector() = default;
  StateVector(SpaceShape s, VectorXcd v);
  int dim() const { return static_cast<int>(amplitudes.size()); }
  double norm() const { return amplitudes.norm(); }
  void normalize();
};

struct DensityMatrix {
  SpaceShape shape;
  MatrixXcd entries;

  DensityMatrix() = default;
  DensityMatrix(SpaceShape s, MatrixXcd m);
  int dim() const { return static_cast<int>(entries.rows()); }
  cxd trace() const { return entries.trace(); }
};

// Kronecker product; output shape is the concatenation of the factor lists.
Operator tensor(const Operator& a, const Operator& b);
StateVector tensor(const StateVector& a, const StateVector& b);

Operator adjoint(const Operator& a);

// Reduced state on the kept factors (indices into shape.factor_dims,
// any order; output factors keep ascending original order).
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep);

// Transpose applied only on the listed factors. Involution: applying the
// same partition twice returns the input exactly.
Operator partial_transpose(const DensityMatrix& rho, const std::vector<int>& part);

// exp(alpha b^dag - conj(alpha) b) in a Fock space truncated at dim.
Operator displacement(cxd alpha, int dim);

cxd expectation(const Operator& op, const StateVector& psi);
cxd expectation(const Operator& op, const DensityMatrix& rho);

// Standard constructions. Two-level convention: index 0 = excited/up,
// index 1 = ground/down, so pauli_z() = diag(1, -1) and
// sigma_minus() maps index 0 to index 1.
Operator identity(const SpaceShape& shape);
Operator annihilation(int dim);  // a|n> = sqrt(n)|n-1>
Operator creation(int dim);
Operator number(int dim);
Operator pauli_x();
Operator pauli_y();
Operator pauli_z();
Operator sigma_minus();
StateVector fock(int dim, int n);
StateVector basis_state(const SpaceShape& shape, int index);
DensityMatrix projector(const StateVector& psi);
DensityMatrix hermitize(const DensityMatrix& rho);

bool is_hermitian(const MatrixXcd& m, double tol);

// Throws NumericalError unless rho is Hermitian within herm_tol, has unit
// trace within trace_tol, and eigenvalues >= -eig_tol.
void validate_physical(const DensityMatrix& rho, double herm_tol = 1e-10,
                       double trace_tol = 1e-8, double eig_tol = 1e-8);

}  // namespace qtbo::hilbert
