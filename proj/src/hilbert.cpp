#include "qtbo/hilbert.hpp"

#include <numeric>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace qtbo::hilbert {

namespace {

// Strides for decoding a flat Kronecker index into per-factor indices;
// factor 0 is the slowest index.
std::vector<long> strides(const SpaceShape& shape) {
  const int m = shape.factors();
  std::vector<long> s(m, 1);
  for (int i = m - 2; i >= 0; --i) s[i] = s[i + 1] * shape.factor_dims[i + 1];
  return s;
}

std::vector<int> decode(long flat, const SpaceShape& shape, const std::vector<long>& str) {
  std::vector<int> idx(shape.factors());
  for (int i = 0; i < shape.factors(); ++i) {
    idx[i] = static_cast<int>(flat / str[i]);
    flat %= str[i];
  }
  return idx;
}

std::vector<int> checked_factor_set(const SpaceShape& shape, std::vector<int> factors,
                                    const char* what) {
  if (factors.empty())
    throw ShapeError(std::string(what) + ": factor set must be nonempty");
  std::sort(factors.begin(), factors.end());
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (factors[i] < 0 || factors[i] >= shape.factors())
      throw ShapeError(std::string(what) + ": invalid factor index " +
                       std::to_string(factors[i]));
    if (i > 0 && factors[i] == factors[i - 1])
      throw ShapeError(std::string(what) + ": duplicate factor index " +
                       std::to_string(factors[i]));
  }
  return factors;
}

}  // namespace

SpaceShape::SpaceShape(std::vector<int> dims) : factor_dims(std::move(dims)) {
  if (factor_dims.empty()) throw ShapeError("SpaceShape: at least one factor required");
  for (int d : factor_dims)
    if (d < 1) throw ShapeError("SpaceShape: every factor dimension must be >= 1");
}

int SpaceShape::total_dim() const {
  return std::accumulate(factor_dims.begin(), factor_dims.end(), 1,
                         [](int a, int b) { return a * b; });
}

Operator::Operator(SpaceShape s, MatrixXcd m) : shape(std::move(s)), entries(std::move(m)) {
  if (entries.rows() != entries.cols())
    throw ShapeError("Operator: entries must be square");
  if (entries.rows() != shape.total_dim())
    throw ShapeError("Operator: matrix side " + std::to_string(entries.rows()) +
                     " does not match shape dimension " + std::to_string(shape.total_dim()));
}

StateVector::StateVector(SpaceShape s, VectorXcd v)
    : shape(std::move(s)), amplitudes(std::move(v)) {
  if (amplitudes.size() != shape.total_dim())
    throw ShapeError("StateVector: length does not match shape dimension");
}

void StateVector::normalize() {
  const double n = amplitudes.norm();
  if (!(n > 0.0) || !std::isfinite(n))
    throw NumericalError("StateVector::normalize: zero or non-finite norm");
  amplitudes /= n;
}

DensityMatrix::DensityMatrix(SpaceShape s, MatrixXcd m)
    : shape(std::move(s)), entries(std::move(m)) {
  if (entries.rows() != entries.cols())
    throw ShapeError("DensityMatrix: entries must be square");
  if (entries.rows() != shape.total_dim())
    throw ShapeError("DensityMatrix: matrix side does not match shape dimension");
}

Operator tensor(const Operator& a, const Operator& b) {
  std::vector<int> dims = a.shape.factor_dims;
  dims.insert(dims.end(), b.shape.factor_dims.begin(), b.shape.factor_dims.end());
  MatrixXcd m = Eigen::kroneckerProduct(a.entries, b.entries);
  return Operator(SpaceShape(std::move(dims)), std::move(m));
}

StateVector tensor(const StateVector& a, const StateVector& b) {
  std::vector<int> dims = a.shape.factor_dims;
  dims.insert(dims.end(), b.shape.factor_dims.begin(), b.shape.factor_dims.end());
  VectorXcd v(a.dim() * b.dim());
  for (int i = 0; i < a.dim(); ++i)
    v.segment(i * b.dim(), b.dim()) = a.amplitudes(i) * b.amplitudes;
  return StateVector(SpaceShape(std::move(dims)), std::move(v));
}

Operator adjoint(const Operator& a) { return Operator(a.shape, a.entries.adjoint()); }

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
  const auto kept = checked_factor_set(rho.shape, keep, "partial_trace");
  const auto str = strides(rho.shape);

  std::vector<int> out_dims;
  for (int f : kept) out_dims.push_back(rho.shape.factor_dims[f]);
  SpaceShape out_shape(out_dims);
  const auto out_str = strides(out_shape);

  std::vector<bool> is_kept(rho.shape.factors(), false);
  for (int f : kept) is_kept[f] = true;

  const long d = rho.dim();
  MatrixXcd out = MatrixXcd::Zero(out_shape.total_dim(), out_shape.total_dim());
  for (long r = 0; r < d; ++r) {
    const auto ri = decode(r, rho.shape, str);
    for (long c = 0; c < d; ++c) {
      const auto ci = decode(c, rho.shape, str);
      bool diag = true;
      for (int f = 0; f < rho.shape.factors(); ++f)
        if (!is_kept[f] && ri[f] != ci[f]) { diag = false; break; }
      if (!diag) continue;
      long ro = 0, co = 0;
      for (std::size_t k = 0; k < kept.size(); ++k) {
        ro += ri[kept[k]] * out_str[k];
        co += ci[kept[k]] * out_str[k];
      }
      out(ro, co) += rho.entries(r, c);
    }
  }
  return DensityMatrix(std::move(out_shape), std::move(out));
}

Operator partial_transpose(const DensityMatrix& rho, const std::vector<int>& part) {
  const auto swapped = checked_factor_set(rho.shape, part, "partial_transpose");
  const auto str = strides(rho.shape);
  std::vector<bool> swap_f(rho.shape.factors(), false);
  for (int f : swapped) swap_f[f] = true;

  const long d = rho.dim();
  MatrixXcd out(d, d);
  for (long r = 0; r < d; ++r) {
    const auto ri = decode(r, rho.shape, str);
    for (long c = 0; c < d; ++c) {
      const auto ci = decode(c, rho.shape, str);
      long r2 = 0, c2 = 0;
      for (int f = 0; f < rho.shape.factors(); ++f) {
        r2 += (swap_f[f] ? ci[f] : ri[f]) * str[f];
        c2 += (swap_f[f] ? ri[f] : ci[f]) * str[f];
      }
      out(r2, c2) = rho.entries(r, c);
    }
  }
  return Operator(rho.shape, std::move(out));
}

Operator displacement(cxd alpha, int dim) {
  if (dim < 2) throw ConfigError("displacement: dim must be >= 2");
  const MatrixXcd b = annihilation(dim).entries;
  const MatrixXcd gen = alpha * b.adjoint() - std::conj(alpha) * b;
  return Operator(SpaceShape({dim}), gen.exp());
}

cxd expectation(const Operator& op, const StateVector& psi) {
  if (!(op.shape == psi.shape)) throw ShapeError("expectation: shape mismatch");
  return psi.amplitudes.dot(op.entries * psi.amplitudes);
}

cxd expectation(const Operator& op, const DensityMatrix& rho) {
  if (!(op.shape == rho.shape)) throw ShapeError("expectation: shape mismatch");
  return (rho.entries * op.entries).trace();
}

Operator identity(const SpaceShape& shape) {
  return Operator(shape, MatrixXcd::Identity(shape.total_dim(), shape.total_dim()));
}

Operator annihilation(int dim) {
  MatrixXcd m = MatrixXcd::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
  return Operator(SpaceShape({dim}), std::move(m));
}

Operator creation(int dim) { return adjoint(annihilation(dim)); }

Operator number(int dim) {
  MatrixXcd m = MatrixXcd::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) m(n, n) = n;
  return Operator(SpaceShape({dim}), std::move(m));
}

Operator pauli_x() {
  MatrixXcd m(2, 2);
  m << 0, 1, 1, 0;
  return Operator(SpaceShape({2}), std::move(m));
}

Operator pauli_y() {
  MatrixXcd m(2, 2);
  m << 0, cxd(0, -1), cxd(0, 1), 0;
  return Operator(SpaceShape({2}), std::move(m));
}

Operator pauli_z() {
  MatrixXcd m(2, 2);
  m << 1, 0, 0, -1;
  return Operator(SpaceShape({2}), std::move(m));
}

Operator sigma_minus() {
  MatrixXcd m = MatrixXcd::Zero(2, 2);
  m(1, 0) = 1;  // lowers |up> (index 0) to |down> (index 1)
  return Operator(SpaceShape({2}), std::move(m));
}

StateVector fock(int dim, int n) {
  if (n < 0 || n >= dim) throw ShapeError("fock: level outside truncated space");
  VectorXcd v = VectorXcd::Zero(dim);
  v(n) = 1.0;
  return StateVector(SpaceShape({dim}), std::move(v));
}

StateVector basis_state(const SpaceShape& shape, int index) {
  if (index < 0 || index >= shape.total_dim())
    throw ShapeError("basis_state: index outside space");
  VectorXcd v = VectorXcd::Zero(shape.total_dim());
  v(index) = 1.0;
  return StateVector(shape, std::move(v));
}

DensityMatrix projector(const StateVector& psi) {
  return DensityMatrix(psi.shape, psi.amplitudes * psi.amplitudes.adjoint());
}

DensityMatrix hermitize(const DensityMatrix& rho) {
  return DensityMatrix(rho.shape, 0.5 * (rho.entries + rho.entries.adjoint()));
}

bool is_hermitian(const MatrixXcd& m, double tol) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

void validate_physical(const DensityMatrix& rho, double herm_tol, double trace_tol,
                       double eig_tol) {
  const double herm = (rho.entries - rho.entries.adjoint()).cwiseAbs().maxCoeff();
  if (!(herm <= herm_tol))
    throw NumericalError("density matrix not Hermitian: max deviation " +
                         std::to_string(herm));
  const double tr_err = std::abs(rho.entries.trace() - cxd(1.0, 0.0));
  if (!(tr_err <= trace_tol))
    throw NumericalError("density matrix trace deviates from 1 by " +
                         std::to_string(tr_err));
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(
      0.5 * (rho.entries + rho.entries.adjoint()));
  const double min_eig = es.eigenvalues().minCoeff();
  if (!(min_eig >= -eig_tol))
    throw NumericalError("density matrix has negative eigenvalue " +
                         std::to_string(min_eig));
}

}  // namespace qtbo::hilbert
