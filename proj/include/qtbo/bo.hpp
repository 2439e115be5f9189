#pragma once

// Born-Oppenheimer machinery for the no-jump effective Hamiltonian:
// biorthogonal fast eigensystem, block decomposition H_0 + H_P, zero-order
// slow modes, spectral propagation, and the perturbative validity measures.
//
// Fast eigensystems are supplied by models through the FastMode interface
// (analytic for the bundled systems); this module handles the block algebra,
// the per-block non-Hermitian eigenproblem, and the ratio diagnostics.

#include <vector>

#include "qtbo/lindblad.hpp"
#include "qtbo/mcwf.hpp"

namespace qtbo::bo {

using hilbert::cxd;
using hilbert::Operator;
using hilbert::StateVector;

// Which Hamiltonian convention the factorization's slow_h carries: the bare
// slow Hamiltonian (dissipation acting on the fast subsystem only) or the
// slow-dissipation form H_s' = H_s - (i/2) sum_k X_k^dag X_k.
enum class Variant { fast_dissipation, slow_dissipation };

// One fast eigenbranch. embed maps a slow-space vector to the full space
// (|phi> -> |phi>|psi_n^R>), project contracts with the left eigenstate
// (<psi_n^L| . ). energy_op is the branch energy E_n as an operator on the
// slow space; it is non-Hermitian whenever the branch decays.
//
// Convention: right fast states unit-norm, left states scaled so that
// <psi_m^L|psi_n^R> = delta_mn.
struct FastMode {
  int index = 0;
  Eigen::MatrixXcd embed;    // full_dim x slow_dim
  Eigen::MatrixXcd project;  // slow_dim x full_dim
  Operator energy_op;        // slow-space operator
};

struct BOFactorization {
  Variant variant = Variant::fast_dissipation;
  std::vector<FastMode> modes;
  Operator slow_h;  // slow Hamiltonian lifted to the full space
  // blocks_h0[n] = H_{n,n} + E_n with H_{n,m} = project_n . slow_h . embed_m
  std::vector<Operator> blocks_h0;
  // coupling_hp[n][m] = H_{n,m} for n != m; diagonal entries exactly zero
  std::vector<std::vector<Operator>> coupling_hp;
  int slow_dim() const { return static_cast<int>(modes.front().embed.cols()); }
};

// Validates biorthonormality (project_m . embed_n = delta_mn I within 1e-8,
// rejected otherwise) and assembles the block decomposition.
BOFactorization build_factorization(const Operator& slow_h, std::vector<FastMode> modes,
                                    Variant variant);

// Zero-order slow eigenmodes of one block: columns of rights are unit-norm
// right eigenvectors, rows of lefts the biorthonormal left covectors, sorted
// by ascending real part of the eigenvalue.
struct BlockModes {
  Eigen::MatrixXcd rights;
  Eigen::MatrixXcd lefts;
  Eigen::VectorXcd eigenvalues;
};

struct SlowModeSet {
  std::vector<BlockModes> blocks;
};

// General (non-Hermitian) eigendecomposition with left modes from the
// adjoint problem, paired by eigenvalue match and maximal overlap. Repeated
// eigenvalues within a block or a right-eigenvector Gram condition number
// above 1e8 raise DegeneracyError: the zero-order theory assumes a
// non-degenerate, diagonalizable block.
BlockModes block_modes(const Eigen::MatrixXcd& block);
SlowModeSet zero_order_modes(const BOFactorization& f);

// Zero-order evolution: expand psi0 in the biorthogonal product basis,
// attach e^{-i E t} per mode, reassemble. The output is NOT normalized; the
// norm decay encodes no-jump survival. Components outside the represented
// mode space are dropped.
StateVector bo_propagate(const BOFactorization& f, const SlowModeSet& s,
                         const StateVector& psi0, double t);

// The same evolution as a full-space matrix U(dt).
Eigen::MatrixXcd spectral_propagator(const BOFactorization& f, const SlowModeSet& s,
                                     double dt);

// Trajectory engine whose no-jump propagator is the spectral step. Exact in
// dt when the coupling blocks vanish.
mcwf::TrajectoryEngine spectral_engine(const BOFactorization& f, const SlowModeSet& s,
                                       std::vector<Operator> jumps);

// max |<phi_{n',k'}^L| H_{n',n} |phi_{n,k}^R> / (E_{n',k'} - E_{n,k})| over
// all cross-block pairs; the first-order smallness parameter of the
// expansion. Pairs with |Delta E| <= 1e-12 raise DegeneracyError.
double validity_ratio(const BOFactorization& f, const SlowModeSet& s);

// Same maximization with caller-supplied numerator operators O_{n',n}
// (indexed [n'][n]; diagonal entries unused).
double gamma_measure(const std::vector<std::vector<Operator>>& numerators,
                     const SlowModeSet& s);

}  // namespace qtbo::bo
