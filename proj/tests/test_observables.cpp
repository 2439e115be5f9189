#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <iostream>
#include <random>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

#include "oracles.hpp"
#include "qtbo/errors.hpp"
#include "qtbo/models.hpp"
#include "qtbo/observables.hpp"

using namespace qtbo;
using namespace qtbo::hilbert;
using namespace qtbo::observables;

namespace {

const SpaceShape kTwoQubits({2, 2});

DensityMatrix qubit_pair(const MatrixXcd& m) { return DensityMatrix(kTwoQubits, m); }

DensityMatrix pure_pair(const VectorXcd& amplitudes) {
  return projector(StateVector(kTwoQubits, amplitudes));
}

VectorXcd bell() {
  VectorXcd v = VectorXcd::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return v;
}

struct ClogCapture {
  std::stringstream stream;
  std::streambuf* old;
  ClogCapture() : old(std::clog.rdbuf(stream.rdbuf())) {}
  ~ClogCapture() { std::clog.rdbuf(old); }
};

}  // namespace

TEST_CASE("negativity") {
  std::mt19937 rng(11);

  SUBCASE("product states carry none") {
    MatrixXcd a = oracles::random_density(2, rng);
    MatrixXcd b = oracles::random_density(3, rng);
    DensityMatrix rho(SpaceShape({2, 3}), Eigen::kroneckerProduct(a, b).eval());
    CHECK(negativity(rho, {1}) <= 1e-12);
  }

  SUBCASE("Bell state reaches one half") {
    DensityMatrix rho = pure_pair(bell());
    double n = negativity(rho, {1});
    CHECK(std::abs(n - 0.5) <= 1e-10);
    CHECK(std::abs(n - oracles::negativity_b(rho.entries, 2, 2)) <= 1e-12);
  }

  SUBCASE("partially entangled pure state") {
    VectorXcd v = VectorXcd::Zero(4);
    v(0) = std::sqrt(0.8);
    v(3) = std::sqrt(0.2);
    CHECK(std::abs(negativity(pure_pair(v), {1}) - 0.4) <= 1e-10);
  }

  SUBCASE("eigenvalue and trace-norm paths agree") {
    for (int rep = 0; rep < 5; ++rep) {
      DensityMatrix rho(SpaceShape({2, 3}), oracles::random_density(6, rng));
      CHECK(std::abs(negativity(rho, {0}) - negativity_trace_norm(rho, {0})) <= 1e-10);
    }
  }

  SUBCASE("transposing either factor gives the same value") {
    DensityMatrix rho(kTwoQubits, oracles::random_density(4, rng));
    CHECK(std::abs(negativity(rho, {0}) - negativity(rho, {1})) <= 1e-12);
  }

  SUBCASE("invariant under local unitaries") {
    MatrixXcd noisy = 0.7 * pure_pair(bell()).entries +
                      0.3 * 0.25 * MatrixXcd::Identity(4, 4);
    double base = negativity(qubit_pair(noisy), {1});
    CHECK(base > 0.05);
    for (int rep = 0; rep < 5; ++rep) {
      MatrixXcd u = Eigen::kroneckerProduct(oracles::random_unitary(2, rng),
                                            oracles::random_unitary(2, rng));
      double rotated = negativity(qubit_pair(u * noisy * u.adjoint()), {1});
      CHECK(std::abs(rotated - base) <= 1e-9);
    }
  }

  SUBCASE("partition and physicality validation") {
    DensityMatrix rho(kTwoQubits, oracles::random_density(4, rng));
    CHECK_THROWS_AS(negativity(rho, {2}), ShapeError);
    CHECK_THROWS_AS(negativity(rho, {0, 0}), ShapeError);
    CHECK_THROWS_AS(negativity(rho, {}), ShapeError);

    MatrixXcd bad = MatrixXcd::Zero(4, 4);
    bad(0, 0) = 1.1;
    bad(1, 1) = -0.1;
    CHECK_THROWS_AS(negativity(qubit_pair(bad), {1}), NumericalError);
  }
}

TEST_CASE("fidelity") {
  std::mt19937 rng(23);

  SUBCASE("identical states give one") {
    for (int dim : {2, 4}) {
      DensityMatrix rho(SpaceShape({dim}), oracles::random_density(dim, rng));
      CHECK(std::abs(fidelity(rho, rho) - 1.0) <= 1e-9);
    }
  }

  SUBCASE("orthogonal pure states give zero") {
    DensityMatrix a = projector(fock(3, 0));
    DensityMatrix b = projector(fock(3, 2));
    CHECK(fidelity(a, b) <= 1e-9);
  }

  SUBCASE("maximally mixed qubit vs a basis state") {
    DensityMatrix mixed(SpaceShape({2}), 0.5 * MatrixXcd::Identity(2, 2));
    DensityMatrix pure = projector(fock(2, 0));
    CHECK(std::abs(fidelity(mixed, pure) - 1.0 / std::sqrt(2.0)) <= 1e-10);
  }

  SUBCASE("symmetric, bounded, matches the direct definition") {
    for (int rep = 0; rep < 5; ++rep) {
      SpaceShape shape({3});
      DensityMatrix r1(shape, oracles::random_density(3, rng));
      DensityMatrix r2(shape, oracles::random_density(3, rng));
      double f12 = fidelity(r1, r2);
      double f21 = fidelity(r2, r1);
      CHECK(std::abs(f12 - f21) <= 1e-9);
      CHECK(f12 >= 0.0);
      CHECK(f12 <= 1.0 + 1e-9);
      CHECK(std::abs(f12 - oracles::fidelity_direct(r1.entries, r2.entries)) <= 1e-9);
    }
  }

  SUBCASE("pure-state overlap identity") {
    for (int rep = 0; rep < 5; ++rep) {
      VectorXcd a = oracles::random_state(3, rng);
      VectorXcd b = oracles::random_state(3, rng);
      SpaceShape shape({3});
      double f = fidelity(projector(StateVector(shape, a)),
                          projector(StateVector(shape, b)));
      // Rank-deficient inputs leave roundoff eigenvalues ~1e-17 in the inner
      // matrix whose square roots bound the achievable accuracy near 1e-8.
      CHECK(std::abs(f - std::abs(a.dot(b))) <= 2e-8);
    }
  }

  SUBCASE("multiplicative under tensor products") {
    SpaceShape pair({2, 2});
    for (int rep = 0; rep < 5; ++rep) {
      MatrixXcd r1 = oracles::random_density(2, rng), s1 = oracles::random_density(2, rng);
      MatrixXcd r2 = oracles::random_density(2, rng), s2 = oracles::random_density(2, rng);
      double joint = fidelity(
          DensityMatrix(pair, Eigen::kroneckerProduct(r1, s1).eval()),
          DensityMatrix(pair, Eigen::kroneckerProduct(r2, s2).eval()));
      double split = fidelity(DensityMatrix(SpaceShape({2}), r1),
                              DensityMatrix(SpaceShape({2}), r2)) *
                     fidelity(DensityMatrix(SpaceShape({2}), s1),
                              DensityMatrix(SpaceShape({2}), s2));
      CHECK(std::abs(joint - split) <= 1e-8);
    }
  }

  SUBCASE("commuting states reduce to the Bhattacharyya sum") {
    MatrixXcd u = oracles::random_unitary(4, rng);
    Eigen::Vector4d p(0.4, 0.3, 0.2, 0.1);
    Eigen::Vector4d q(0.05, 0.45, 0.15, 0.35);
    DensityMatrix r1(SpaceShape({4}),
                     (u * p.cast<cxd>().asDiagonal() * u.adjoint()).eval());
    DensityMatrix r2(SpaceShape({4}),
                     (u * q.cast<cxd>().asDiagonal() * u.adjoint()).eval());
    double expected = p.cwiseProduct(q).cwiseSqrt().sum();
    CHECK(std::abs(fidelity(r1, r2) - expected) <= 1e-10);
  }

  SUBCASE("tiny negative eigenvalues are clipped and logged") {
    Eigen::Vector4d d(0.6, 0.3, 0.1 + 5e-9, -5e-9);
    DensityMatrix rho(kTwoQubits, MatrixXcd(d.cast<cxd>().asDiagonal()));
    DensityMatrix other(kTwoQubits, 0.25 * MatrixXcd::Identity(4, 4));
    ClogCapture capture;
    double f = fidelity(rho, other);
    CHECK(capture.stream.str().find("clipping") != std::string::npos);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0 + 1e-9);
  }

  SUBCASE("genuinely negative inputs are rejected") {
    Eigen::Vector4d d(0.7, 0.3, 1e-6, -1e-6);
    DensityMatrix rho(kTwoQubits, MatrixXcd(d.cast<cxd>().asDiagonal()));
    DensityMatrix other(kTwoQubits, 0.25 * MatrixXcd::Identity(4, 4));
    CHECK_THROWS_AS(fidelity(rho, other), NumericalError);
  }

  SUBCASE("mismatched spaces are rejected") {
    DensityMatrix a(SpaceShape({2}), 0.5 * MatrixXcd::Identity(2, 2));
    DensityMatrix b(SpaceShape({3}),
                    MatrixXcd(MatrixXcd::Identity(3, 3) / 3.0));
    CHECK_THROWS_AS(fidelity(a, b), ShapeError);
  }
}

TEST_CASE("expectation series") {
  std::mt19937 rng(31);

  SUBCASE("identity gives a constant one") {
    SpaceShape shape({3});
    std::vector<double> times{0.0, 0.5, 1.0};
    std::vector<DensityMatrix> states;
    for (int j = 0; j < 3; ++j)
      states.emplace_back(shape, oracles::random_density(3, rng));
    ObservableSeries s = series(identity(shape), times, states, "unit");
    CHECK(s.label == "unit");
    REQUIRE(s.values.size() == 3);
    for (double v : s.values) CHECK(std::abs(v - 1.0) <= 1e-12);
  }

  SUBCASE("polarization of the spin-up state") {
    ObservableSeries s = series(pauli_z(), {0.0}, {projector(fock(2, 0))});
    CHECK(s.values[0] == doctest::Approx(1.0).epsilon(1e-14));
  }

  SUBCASE("displaced branch ground state has the static shift 2g/Omega") {
    models::OptomechParams p;  // g = 0.1, Omega = 1, gamma = 0
    bo::SlowModeSet modes =
        models::optomech_bo_modes(p, bo::Variant::fast_dissipation);
    SpaceShape mirror({p.n_b});
    StateVector ground(mirror, modes.blocks[1].rights.col(0));
    Operator x(mirror, annihilation(p.n_b).entries + creation(p.n_b).entries);
    ObservableSeries s = series(x, {0.0}, {projector(ground)});
    double expected = 2.0 * p.g / p.capital_omega;
    CHECK(std::abs(s.values[0] - expected) <= 1e-8);

    // Independent displacement-operator oracle for the same expectation.
    StateVector displaced(
        mirror, displacement(p.g / p.capital_omega, p.n_b).entries.col(0));
    ObservableSeries oracle = series(x, {0.0}, {projector(displaced)});
    CHECK(std::abs(oracle.values[0] - expected) <= 1e-10);
  }

  SUBCASE("imaginary-part guard on Hermitian observables") {
    SpaceShape shape({2});
    MatrixXcd skew = MatrixXcd::Zero(2, 2);
    skew(0, 0) = 0.5;
    skew(1, 1) = 0.5;
    skew(0, 1) = cxd(0.0, 0.4);
    skew(1, 0) = cxd(0.0, 0.4);  // not Hermitian: tr(sigma_x rho) is imaginary
    std::vector<DensityMatrix> states{DensityMatrix(shape, skew)};
    CHECK_THROWS_AS(series(pauli_x(), {0.0}, states), NumericalError);

    // Non-Hermitian diagnostics skip the guard.
    ObservableSeries s = series(sigma_minus(), {0.0}, states);
    CHECK(std::isfinite(s.values[0]));
  }

  SUBCASE("input validation") {
    SpaceShape shape({2});
    std::vector<DensityMatrix> states{
        DensityMatrix(shape, 0.5 * MatrixXcd::Identity(2, 2)),
        DensityMatrix(shape, 0.5 * MatrixXcd::Identity(2, 2))};
    CHECK_THROWS_AS(series(pauli_z(), {0.0}, states), ShapeError);
    CHECK_THROWS_AS(series(pauli_z(), {0.0, 0.0}, states), ConfigError);
    CHECK_THROWS_AS(series(identity(SpaceShape({3})), {0.0, 1.0}, states), ShapeError);
  }
}
