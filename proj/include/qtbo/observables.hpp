#pragma once

// Measurement post-processing: entanglement negativity, mixed-state
// fidelity, and expectation-value time series.

#include <string>
#include <vector>

#include "qtbo/hilbert.hpp"

namespace qtbo::observables {

using hilbert::DensityMatrix;
using hilbert::Operator;

struct ObservableSeries {
  std::string label;
  std::vector<double> times;   // strictly ascending
  std::vector<double> values;  // same length as times
};

// Sum of |negative eigenvalues| of the partial transpose over the listed
// factors, computed from the exact dense spectrum so the negative branch is
// available for diagnostics. Input must be a physical density matrix.
double negativity(const DensityMatrix& rho, const std::vector<int>& part);

// The same quantity through the trace-norm identity (||rho^T_A||_1 - 1)/2,
// evaluated by singular values; kept as an independent cross-check path.
double negativity_trace_norm(const DensityMatrix& rho, const std::vector<int>& part);

// Uhlmann fidelity F = Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)) via Hermitian
// eigendecompositions. Eigenvalues in [-1e-8, 0) are clipped to zero (and
// the clip logged to std::clog): trajectory averages carry O(1/sqrt(N))
// noise that can push tiny eigenvalues slightly negative. Anything below
// -1e-8 is rejected as unphysical.
double fidelity(const DensityMatrix& rho1, const DensityMatrix& rho2);

// Expectation series tr(op rho_j). For a Hermitian op the imaginary part of
// every expectation must stay within 1e-8 (NumericalError otherwise); for
// non-Hermitian diagnostics the real part is recorded without the guard.
ObservableSeries series(const Operator& op, const std::vector<double>& times,
                        const std::vector<DensityMatrix>& states,
                        std::string label = "");

}  // namespace qtbo::observables
