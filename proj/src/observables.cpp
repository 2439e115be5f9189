#include "qtbo/observables.hpp"

#include <cmath>
#include <iostream>
#include <sstream>
#include <utility>

#include "qtbo/errors.hpp"

namespace qtbo::observables {

using hilbert::cxd;
using hilbert::MatrixXcd;

namespace {

constexpr double kClipFloor = -1e-8;

// Clips eigenvalues in [-1e-8, 0) to zero, rejecting anything below the
// floor. Clips are logged once per call (count and worst magnitude) so
// heavily rank-deficient inputs do not flood the log.
void clip_eigenvalues(Eigen::VectorXd& vals, const char* context) {
  Eigen::Index clipped = 0;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals(i) < kClipFloor) {
      std::ostringstream msg;
      msg << context << ": eigenvalue " << vals(i) << " below " << kClipFloor;
      throw NumericalError(msg.str());
    }
    if (vals(i) < 0.0) {
      worst = std::min(worst, vals(i));
      vals(i) = 0.0;
      ++clipped;
    }
  }
  if (clipped > 0)
    std::clog << "observables: clipping " << clipped << " eigenvalue(s) to zero in "
              << context << " (worst " << worst << ")\n";
}

// Hermitian square root with the clipping rule above.
MatrixXcd sqrt_clipped(const MatrixXcd& m, const char* context) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (m + m.adjoint()));
  Eigen::VectorXd vals = es.eigenvalues();
  clip_eigenvalues(vals, context);
  return es.eigenvectors() * vals.cwiseSqrt().asDiagonal() *
         es.eigenvectors().adjoint();
}

}  // namespace

double negativity(const DensityMatrix& rho, const std::vector<int>& part) {
  hilbert::validate_physical(rho);
  Operator pt = hilbert::partial_transpose(rho, part);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(
      0.5 * (pt.entries + pt.entries.adjoint()));
  double total = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) < 0.0) total -= es.eigenvalues()(i);
  return total;
}

double negativity_trace_norm(const DensityMatrix& rho, const std::vector<int>& part) {
  hilbert::validate_physical(rho);
  Operator pt = hilbert::partial_transpose(rho, part);
  Eigen::JacobiSVD<MatrixXcd> svd(pt.entries);
  return 0.5 * (svd.singularValues().sum() - 1.0);
}

double fidelity(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  if (!(rho1.shape == rho2.shape))
    throw ShapeError("fidelity: density matrices live on different spaces");
  hilbert::validate_physical(rho1);
  hilbert::validate_physical(rho2);

  MatrixXcd root = sqrt_clipped(rho1.entries, "fidelity input");
  MatrixXcd inner = root * rho2.entries * root;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (inner + inner.adjoint()));
  Eigen::VectorXd vals = es.eigenvalues();
  clip_eigenvalues(vals, "fidelity");
  return vals.cwiseSqrt().sum();
}

ObservableSeries series(const Operator& op, const std::vector<double>& times,
                        const std::vector<hilbert::DensityMatrix>& states,
                        std::string label) {
  if (times.size() != states.size())
    throw ShapeError("series: " + std::to_string(times.size()) + " times vs " +
                     std::to_string(states.size()) + " states");
  for (std::size_t j = 1; j < times.size(); ++j)
    if (!(times[j] > times[j - 1]))
      throw ConfigError("series: times must be strictly ascending");

  const bool hermitian = hilbert::is_hermitian(op.entries, 1e-10);
  ObservableSeries out;
  out.label = std::move(label);
  out.times = times;
  out.values.reserve(states.size());
  for (std::size_t j = 0; j < states.size(); ++j) {
    if (!(states[j].shape == op.shape))
      throw ShapeError("series: state " + std::to_string(j) +
                       " does not match the observable's space");
    cxd value = (op.entries * states[j].entries).trace();
    if (hermitian && std::abs(value.imag()) > 1e-8) {
      std::ostringstream msg;
      msg << "series: Hermitian expectation has imaginary part " << value.imag()
          << " at sample " << j;
      throw NumericalError(msg.str());
    }
    out.values.push_back(value.real());
  }
  return out;
}

}  // namespace qtbo::observables
