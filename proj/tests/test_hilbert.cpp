#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "qtbo/hilbert.hpp"

using namespace qtbo;
using namespace qtbo::hilbert;

namespace {
StateVector plus_state(int dim) {
  VectorXcd v = VectorXcd::Zero(dim);
  v(0) = v(1) = 1.0 / std::sqrt(2.0);
  return StateVector(SpaceShape({dim}), v);
}
}  // namespace

TEST_CASE("SpaceShape validation") {
  CHECK(SpaceShape({2, 3, 4}).total_dim() == 24);
  CHECK_THROWS_AS(SpaceShape(std::vector<int>{}), ShapeError);
  CHECK_THROWS_AS(SpaceShape({2, 0}), ShapeError);
  CHECK_THROWS_AS(Operator(SpaceShape({3}), MatrixXcd::Zero(2, 2)), ShapeError);
  CHECK_THROWS_AS(StateVector(SpaceShape({3}), VectorXcd::Zero(2)), ShapeError);
}

TEST_CASE("tensor products") {
  const Operator i2 = identity(SpaceShape({2}));
  const Operator i3 = identity(SpaceShape({3}));

  SUBCASE("identity case") {
    const Operator i6 = tensor(i2, i3);
    CHECK(i6.shape.factor_dims == std::vector<int>{2, 3});
    CHECK(i6.entries.isIdentity(0.0));
  }

  SUBCASE("sigma_z kron I2 diagonal") {
    const Operator sz = tensor(pauli_z(), i2);
    for (int i = 0; i < 4; ++i) {
      const double want = i < 2 ? 1.0 : -1.0;
      CHECK(sz.entries(i, i) == cxd(want, 0.0));
    }
  }

  SUBCASE("lowering a tensor factor") {
    const Operator a3 = annihilation(3);
    const StateVector in = tensor(fock(3, 2), fock(2, 0));
    const VectorXcd out = tensor(a3, i2).entries * in.amplitudes;
    const VectorXcd want = std::sqrt(2.0) * tensor(fock(3, 1), fock(2, 0)).amplitudes;
    CHECK((out - want).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("associativity, structured operators exactly") {
    const Operator lhs = tensor(tensor(pauli_x(), annihilation(3)), pauli_z());
    const Operator rhs = tensor(pauli_x(), tensor(annihilation(3), pauli_z()));
    CHECK(lhs.shape == rhs.shape);
    CHECK((lhs.entries - rhs.entries).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("associativity, random entries to rounding") {
    std::mt19937 rng(7);
    const Operator a(SpaceShape({2}), oracles::random_matrix(2, rng));
    const Operator b(SpaceShape({3}), oracles::random_matrix(3, rng));
    const Operator c(SpaceShape({2}), oracles::random_matrix(2, rng));
    const MatrixXcd lhs = tensor(tensor(a, b), c).entries;
    const MatrixXcd rhs = tensor(a, tensor(b, c)).entries;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("adjoint") {
  SUBCASE("creation from annihilation") {
    const Operator ad = adjoint(annihilation(5));
    for (int n = 0; n + 1 < 5; ++n) {
      const VectorXcd out = ad.entries * fock(5, n).amplitudes;
      CHECK(std::abs(out(n + 1) - std::sqrt(n + 1.0)) == 0.0);
    }
  }

  SUBCASE("Hermitian fixed point and sigma ladder") {
    std::mt19937 rng(3);
    const MatrixXcd h = oracles::random_hermitian(4, rng);
    CHECK((adjoint(Operator(SpaceShape({4}), h)).entries - h).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((adjoint(sigma_minus()).entries -
           (pauli_x().entries + cxd(0, 1) * pauli_y().entries) / 2.0)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }

  SUBCASE("involution is exact") {
    std::mt19937 rng(11);
    const Operator a(SpaceShape({5}), oracles::random_matrix(5, rng));
    CHECK((adjoint(adjoint(a)).entries - a.entries).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("(AB)^dag = B^dag A^dag") {
    std::mt19937 rng(13);
    const MatrixXcd a = oracles::random_matrix(4, rng);
    const MatrixXcd b = oracles::random_matrix(4, rng);
    CHECK(((a * b).adjoint() - b.adjoint() * a.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("partial trace") {
  std::mt19937 rng(17);

  SUBCASE("product state marginals") {
    const MatrixXcd ra = oracles::random_density(2, rng);
    const MatrixXcd rb = oracles::random_density(3, rng);
    const DensityMatrix rho(SpaceShape({2, 3}), Eigen::kroneckerProduct(ra, rb).eval());
    CHECK((partial_trace(rho, {0}).entries - ra).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((partial_trace(rho, {1}).entries - rb).cwiseAbs().maxCoeff() < 1e-14);
  }

  SUBCASE("Bell state reduces to maximally mixed") {
    VectorXcd bell = VectorXcd::Zero(4);
    bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
    const DensityMatrix rho(SpaceShape({2, 2}), bell * bell.adjoint());
    const DensityMatrix red = partial_trace(rho, {0});
    CHECK((red.entries - 0.5 * MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  }

  SUBCASE("trace preservation on random states") {
    const DensityMatrix rho(SpaceShape({2, 3, 2}), oracles::random_density(12, rng));
    for (const auto& keep : std::vector<std::vector<int>>{{0}, {1}, {2}, {0, 2}, {1, 2}}) {
      const auto red = partial_trace(rho, keep);
      CHECK(std::abs(red.trace() - rho.trace()) < 1e-13);
    }
  }

  SUBCASE("invalid factor index") {
    const DensityMatrix rho(SpaceShape({2, 2}), oracles::random_density(4, rng));
    CHECK_THROWS_AS(partial_trace(rho, {2}), ShapeError);
    CHECK_THROWS_AS(partial_trace(rho, {}), ShapeError);
  }
}

TEST_CASE("partial transpose") {
  std::mt19937 rng(19);

  SUBCASE("product state transposes one factor") {
    const MatrixXcd ra = oracles::random_density(2, rng);
    const MatrixXcd rb = oracles::random_density(3, rng);
    const DensityMatrix rho(SpaceShape({2, 3}), Eigen::kroneckerProduct(ra, rb).eval());
    const MatrixXcd want = Eigen::kroneckerProduct(ra, rb.transpose().eval()).eval();
    CHECK((partial_transpose(rho, {1}).entries - want).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("Bell state eigenvalue -1/2 against eigensolve oracle") {
    VectorXcd bell = VectorXcd::Zero(4);
    bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
    const DensityMatrix rho(SpaceShape({2, 2}), bell * bell.adjoint());
    const Operator pt = partial_transpose(rho, {1});
    CHECK((pt.entries - oracles::partial_transpose_b(rho.entries, 2, 2)).cwiseAbs().maxCoeff() ==
          0.0);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(pt.entries);
    CHECK(es.eigenvalues().minCoeff() == doctest::Approx(-0.5).epsilon(1e-12));
  }

  SUBCASE("involution and basic preservation") {
    const DensityMatrix rho(SpaceShape({2, 3}), oracles::random_density(6, rng));
    const Operator once = partial_transpose(rho, {1});
    const Operator twice = partial_transpose(DensityMatrix(rho.shape, once.entries), {1});
    CHECK((twice.entries - rho.entries).cwiseAbs().maxCoeff() == 0.0);
    CHECK(std::abs(once.entries.trace() - rho.entries.trace()) < 1e-15);
    CHECK(is_hermitian(once.entries, 1e-14));
  }
}

TEST_CASE("displacement operator") {
  SUBCASE("zero displacement is the identity") {
    CHECK((displacement(0.0, 8).entries - MatrixXcd::Identity(8, 8)).cwiseAbs().maxCoeff() <
          1e-14);
  }

  SUBCASE("vacuum overlap matches the coherent-state closed form") {
    for (const cxd alpha : {cxd(0.3, 0.0), cxd(0.1, -0.4), cxd(-0.5, 0.1)}) {
      const Operator d = displacement(alpha, 16);
      const cxd got = d.entries(0, 0);
      const double want = std::exp(-0.5 * std::norm(alpha));
      CHECK(std::abs(got - want) < 1e-8);
    }
  }

  SUBCASE("inverse displacement") {
    const cxd alpha(0.4, -0.2);
    const MatrixXcd prod = displacement(alpha, 16).entries * displacement(-alpha, 16).entries;
    CHECK((prod - MatrixXcd::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-8);
  }

  SUBCASE("dim precondition") { CHECK_THROWS_AS(displacement(0.1, 1), ConfigError); }
}

TEST_CASE("expectation values") {
  SUBCASE("spin and number basics") {
    const StateVector up = basis_state(SpaceShape({2}), 0);
    CHECK(expectation(pauli_z(), up).real() == doctest::Approx(1.0).epsilon(1e-14));
    const StateVector plus = plus_state(4);
    const Operator n4 = number(4);
    CHECK(expectation(n4, plus).real() == doctest::Approx(0.5).epsilon(1e-14));
  }

  SUBCASE("identity on a unit-trace density matrix") {
    std::mt19937 rng(23);
    const DensityMatrix rho(SpaceShape({5}), oracles::random_density(5, rng));
    CHECK(std::abs(expectation(identity(rho.shape), rho) - cxd(1, 0)) < 1e-12);
  }

  SUBCASE("Hermitian operators give real expectations") {
    std::mt19937 rng(29);
    for (int rep = 0; rep < 20; ++rep) {
      const Operator h(SpaceShape({4}), oracles::random_hermitian(4, rng));
      const StateVector psi(SpaceShape({4}), oracles::random_state(4, rng));
      CHECK(std::abs(expectation(h, psi).imag()) <= 1e-10);
      const DensityMatrix rho(SpaceShape({4}), oracles::random_density(4, rng));
      CHECK(std::abs(expectation(h, rho).imag()) <= 1e-10);
    }
  }

  SUBCASE("shape mismatch") {
    const StateVector up = basis_state(SpaceShape({2}), 0);
    CHECK_THROWS_AS(expectation(number(3), up), ShapeError);
  }
}

TEST_CASE("physicality validation") {
  std::mt19937 rng(31);
  const DensityMatrix good(SpaceShape({4}), oracles::random_density(4, rng));
  CHECK_NOTHROW(validate_physical(good));

  MatrixXcd bad_trace = good.entries * 1.5;
  CHECK_THROWS_AS(validate_physical(DensityMatrix(good.shape, bad_trace)), NumericalError);

  MatrixXcd bad_herm = good.entries;
  bad_herm(0, 1) += cxd(0, 1e-3);
  CHECK_THROWS_AS(validate_physical(DensityMatrix(good.shape, bad_herm)), NumericalError);

  const MatrixXcd u = oracles::random_unitary(4, rng);
  Eigen::Vector4d spectrum(0.7, 0.3, 0.1, -0.1);
  const MatrixXcd neg = u * spectrum.cast<cxd>().asDiagonal() * u.adjoint();
  CHECK_THROWS_AS(validate_physical(DensityMatrix(good.shape, neg)), NumericalError);
}

TEST_CASE("normalization invariant") {
  std::mt19937 rng(37);
  StateVector psi(SpaceShape({6}), 3.7 * oracles::random_state(6, rng));
  psi.normalize();
  CHECK(std::abs(psi.norm() - 1.0) <= 1e-12);
  StateVector zero(SpaceShape({2}), VectorXcd::Zero(2));
  CHECK_THROWS_AS(zero.normalize(), NumericalError);
}
