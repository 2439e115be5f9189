#include "qtbo/bo.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qtbo/errors.hpp"

namespace qtbo::bo {

namespace {

constexpr double kBiorthTol = 1e-8;
constexpr double kGapTol = 1e-8;
constexpr double kGramCondMax = 1e8;
constexpr double kDegenerateGap = 1e-12;

}  // namespace

BOFactorization build_factorization(const Operator& slow_h, std::vector<FastMode> modes,
                                    Variant variant) {
  if (modes.empty()) throw ConfigError("build_factorization: no fast modes supplied");
  const Eigen::Index full = slow_h.entries.rows();
  const Eigen::Index slow = modes.front().embed.cols();
  if (slow < 1) throw ShapeError("build_factorization: empty slow space");
  for (const auto& mode : modes) {
    if (mode.embed.rows() != full || mode.embed.cols() != slow ||
        mode.project.rows() != slow || mode.project.cols() != full)
      throw ShapeError("build_factorization: embed/project dimensions inconsistent");
    if (mode.energy_op.entries.rows() != slow || mode.energy_op.entries.cols() != slow)
      throw ShapeError("build_factorization: energy operator is not slow-space sized");
  }

  const std::size_t n_modes = modes.size();
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(slow, slow);
  for (std::size_t m = 0; m < n_modes; ++m)
    for (std::size_t n = 0; n < n_modes; ++n) {
      const Eigen::MatrixXcd overlap = modes[m].project * modes[n].embed;
      const double defect =
          (m == n) ? (overlap - eye).cwiseAbs().maxCoeff() : overlap.cwiseAbs().maxCoeff();
      if (defect > kBiorthTol)
        throw ConfigError("build_factorization: fast modes are not biorthonormal (pair " +
                          std::to_string(m) + "," + std::to_string(n) + ", defect " +
                          std::to_string(defect) + ")");
    }

  BOFactorization f;
  f.variant = variant;
  f.slow_h = slow_h;
  const hilbert::SpaceShape slow_shape({static_cast<int>(slow)});
  f.blocks_h0.reserve(n_modes);
  f.coupling_hp.assign(n_modes, std::vector<Operator>(n_modes));
  for (std::size_t n = 0; n < n_modes; ++n) {
    for (std::size_t m = 0; m < n_modes; ++m) {
      Eigen::MatrixXcd h_nm = modes[n].project * slow_h.entries * modes[m].embed;
      if (n == m) {
        f.blocks_h0.push_back(
            Operator(slow_shape, h_nm + modes[n].energy_op.entries));
        f.coupling_hp[n][m] = Operator(slow_shape, Eigen::MatrixXcd::Zero(slow, slow));
      } else {
        f.coupling_hp[n][m] = Operator(slow_shape, std::move(h_nm));
      }
    }
  }
  f.modes = std::move(modes);
  return f;
}

BlockModes block_modes(const Eigen::MatrixXcd& block) {
  if (block.rows() != block.cols() || block.rows() < 1)
    throw ShapeError("block_modes: block must be square");
  if (!block.allFinite()) throw NumericalError("block_modes: non-finite block");
  const Eigen::Index dim = block.rows();

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> right_solver(block, true);
  if (right_solver.info() != Eigen::Success)
    throw NumericalError("block_modes: eigensolver failed");
  Eigen::VectorXcd values = right_solver.eigenvalues();
  Eigen::MatrixXcd rights = right_solver.eigenvectors();  // unit-norm columns

  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = i + 1; j < dim; ++j)
      if (std::abs(values(i) - values(j)) <= kGapTol)
        throw DegeneracyError("block_modes: eigenvalues " + std::to_string(i) + " and " +
                              std::to_string(j) +
                              " coincide within tolerance; zero-order theory assumes a "
                              "non-degenerate block");

  {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(rights);
    const double smin = svd.singularValues()(dim - 1);
    if (!(smin > 0.0) || svd.singularValues()(0) / smin > kGramCondMax)
      throw DegeneracyError(
          "block_modes: right eigenvectors are nearly linearly dependent (block close "
          "to defective)");
  }

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> left_solver(block.adjoint(), true);
  if (left_solver.info() != Eigen::Success)
    throw NumericalError("block_modes: adjoint eigensolver failed");
  const Eigen::VectorXcd adj_values = left_solver.eigenvalues();
  const Eigen::MatrixXcd adj_vectors = left_solver.eigenvectors();

  // Pair each right eigenvector with the adjoint-problem vector whose
  // eigenvalue matches (mu = conj(lambda)) and whose overlap is largest.
  Eigen::MatrixXcd lefts(dim, dim);
  std::vector<bool> used(dim, false);
  for (Eigen::Index k = 0; k < dim; ++k) {
    Eigen::Index best = -1;
    double best_overlap = -1.0;
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (used[j]) continue;
      if (std::abs(std::conj(adj_values(j)) - values(k)) > kGapTol) continue;
      const double overlap = std::abs(adj_vectors.col(j).dot(rights.col(k)));
      if (overlap > best_overlap) {
        best_overlap = overlap;
        best = j;
      }
    }
    if (best < 0)
      throw DegeneracyError("block_modes: no left eigenvector matches eigenvalue index " +
                            std::to_string(k));
    const cxd inner = adj_vectors.col(best).dot(rights.col(k));  // <w|v>
    if (!(std::abs(inner) > 0.0))
      throw DegeneracyError("block_modes: left/right pair is orthogonal (defective block)");
    lefts.row(k) = adj_vectors.col(best).adjoint() / inner;
    used[best] = true;
  }

  // Deterministic order: ascending real part, imaginary part breaking ties.
  std::vector<Eigen::Index> order(dim);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (values(a).real() != values(b).real()) return values(a).real() < values(b).real();
    return values(a).imag() < values(b).imag();
  });
  BlockModes out;
  out.rights.resize(dim, dim);
  out.lefts.resize(dim, dim);
  out.eigenvalues.resize(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    out.rights.col(k) = rights.col(order[k]);
    out.lefts.row(k) = lefts.row(order[k]);
    out.eigenvalues(k) = values(order[k]);
  }
  return out;
}

SlowModeSet zero_order_modes(const BOFactorization& f) {
  SlowModeSet s;
  s.blocks.reserve(f.blocks_h0.size());
  for (const auto& block : f.blocks_h0) s.blocks.push_back(block_modes(block.entries));
  return s;
}

namespace {

void check_mode_set(const BOFactorization& f, const SlowModeSet& s) {
  if (s.blocks.size() != f.modes.size())
    throw ShapeError("slow mode set does not match the factorization's fast modes");
}

Eigen::VectorXcd propagate_amplitudes(const BOFactorization& f, const SlowModeSet& s,
                                      const Eigen::VectorXcd& psi, double t) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(psi.size());
  for (std::size_t n = 0; n < f.modes.size(); ++n) {
    const auto& mode = f.modes[n];
    const auto& blk = s.blocks[n];
    Eigen::VectorXcd c = blk.lefts * (mode.project * psi);
    for (Eigen::Index k = 0; k < c.size(); ++k)
      c(k) *= std::exp(cxd(0.0, -1.0) * blk.eigenvalues(k) * t);
    out.noalias() += mode.embed * (blk.rights * c);
  }
  return out;
}

}  // namespace

StateVector bo_propagate(const BOFactorization& f, const SlowModeSet& s,
                         const StateVector& psi0, double t) {
  check_mode_set(f, s);
  if (psi0.amplitudes.size() != f.slow_h.entries.rows())
    throw ShapeError("bo_propagate: state does not live in the represented space");
  return StateVector(psi0.shape, propagate_amplitudes(f, s, psi0.amplitudes, t));
}

Eigen::MatrixXcd spectral_propagator(const BOFactorization& f, const SlowModeSet& s,
                                     double dt) {
  check_mode_set(f, s);
  const Eigen::Index full = f.slow_h.entries.rows();
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(full, full);
  for (std::size_t n = 0; n < f.modes.size(); ++n) {
    const auto& mode = f.modes[n];
    const auto& blk = s.blocks[n];
    Eigen::VectorXcd phases(blk.eigenvalues.size());
    for (Eigen::Index k = 0; k < phases.size(); ++k)
      phases(k) = std::exp(cxd(0.0, -1.0) * blk.eigenvalues(k) * dt);
    u.noalias() += mode.embed *
                   (blk.rights * phases.asDiagonal() * blk.lefts) * mode.project;
  }
  return u;
}

mcwf::TrajectoryEngine spectral_engine(const BOFactorization& f, const SlowModeSet& s,
                                       std::vector<Operator> jumps) {
  check_mode_set(f, s);
  mcwf::TrajectoryEngine engine;
  engine.shape = f.slow_h.shape;
  const Eigen::Index full = f.slow_h.entries.rows();
  for (const auto& l : jumps)
    if (l.entries.rows() != full || l.entries.cols() != full)
      throw ShapeError("spectral_engine: jump operator space mismatch");
  engine.jumps = std::move(jumps);
  engine.advance = [f, s](const Eigen::VectorXcd& psi, double, double dt) {
    return propagate_amplitudes(f, s, psi, dt);
  };
  return engine;
}

namespace {

double ratio_maximum(const SlowModeSet& s,
                     const std::function<const Eigen::MatrixXcd*(std::size_t, std::size_t)>&
                         numerator_for,
                     const char* what) {
  double worst = 0.0;
  for (std::size_t np = 0; np < s.blocks.size(); ++np)
    for (std::size_t n = 0; n < s.blocks.size(); ++n) {
      if (np == n) continue;
      const Eigen::MatrixXcd* op = numerator_for(np, n);
      if (op == nullptr) continue;
      const auto& bra = s.blocks[np];
      const auto& ket = s.blocks[n];
      const Eigen::MatrixXcd elements = bra.lefts * (*op) * ket.rights;
      for (Eigen::Index kp = 0; kp < elements.rows(); ++kp)
        for (Eigen::Index k = 0; k < elements.cols(); ++k) {
          const cxd gap = bra.eigenvalues(kp) - ket.eigenvalues(k);
          if (std::abs(gap) <= kDegenerateGap)
            throw DegeneracyError(std::string(what) + ": degenerate pair (" +
                                  std::to_string(np) + "," + std::to_string(kp) +
                                  ") vs (" + std::to_string(n) + "," +
                                  std::to_string(k) + ")");
          worst = std::max(worst, std::abs(elements(kp, k)) / std::abs(gap));
        }
    }
  return worst;
}

}  // namespace

double validity_ratio(const BOFactorization& f, const SlowModeSet& s) {
  check_mode_set(f, s);
  return ratio_maximum(
      s,
      [&](std::size_t np, std::size_t n) { return &f.coupling_hp[np][n].entries; },
      "validity_ratio");
}

double gamma_measure(const std::vector<std::vector<Operator>>& numerators,
                     const SlowModeSet& s) {
  if (numerators.size() != s.blocks.size())
    throw ShapeError("gamma_measure: numerator grid does not match block count");
  for (const auto& row : numerators)
    if (row.size() != s.blocks.size())
      throw ShapeError("gamma_measure: numerator grid is not square");
  return ratio_maximum(
      s,
      [&](std::size_t np, std::size_t n) { return &numerators[np][n].entries; },
      "gamma_measure");
}

}  // namespace qtbo::bo
