#include "doctest.h"
#include "test_support.hpp"

using namespace qspline;
using namespace qspline::testing;

namespace {
const Complex I(0.0L, 1.0L);

AlgebraElement i_pauli(int k) { return AlgebraElement(I * pauli()[static_cast<std::size_t>(k)]); }
}  // namespace

TEST_CASE("inner product on su(2)") {
  CHECK(inner(i_pauli(2), i_pauli(2)) == doctest::Approx(4.0L));
  CHECK(inner(i_pauli(0), i_pauli(1)) == doctest::Approx(0.0L));
  CHECK(inner(AlgebraElement::zero(2), i_pauli(1)) == 0.0L);
  CHECK_THROWS_AS(inner(AlgebraElement::zero(2), AlgebraElement::zero(3)), DimensionError);
  for (int t = 0; t < 10; ++t) {
    const auto a = random_su(3), b = random_su(3);
    CHECK(inner(a, b) == doctest::Approx(inner(b, a)).epsilon(1e-14L));
    CHECK(inner(a, a) > 0.0L);
  }
}

TEST_CASE("AlgebraElement construction repairs small drift and rejects large violations") {
  Matrix m = random_su(3).matrix();
  Matrix drift = m;
  drift(0, 0) += Complex(1e-10L, 0.0L);
  const AlgebraElement repaired(drift);
  CHECK(std::abs(repaired.matrix().trace()) < 1e-14L);
  CHECK((repaired.matrix() + repaired.matrix().adjoint()).norm() < 1e-14L);
  Matrix bad = m;
  bad(0, 1) += 1e-3L;
  CHECK_THROWS_AS(AlgebraElement{bad}, InvariantError);
  CHECK_THROWS_AS(AlgebraElement{Matrix::Identity(2, 2) * I}, InvariantError);
}

TEST_CASE("Cayley map") {
  CHECK(max_abs_diff(cayley(AlgebraElement::zero(2)).matrix(), Matrix::Identity(2, 2)) == 0.0L);

  // Hand 2x2 inverse: (1 - i sz/2)^{-1}(1 + i sz/2) = diag((1+i/2)/(1-i/2), conj).
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = Complex(0.6L, 0.8L);
  expected(1, 1) = Complex(0.6L, -0.8L);
  const auto v = cayley(i_pauli(2));
  CHECK(max_abs_diff(v.matrix(), expected) < 1e-15L);
  // Generic linear-solver cross-check.
  const Matrix half = 0.5L * i_pauli(2).matrix();
  const Matrix via_solver = (Matrix::Identity(2, 2) - half).fullPivLu().solve(Matrix::Identity(2, 2) + half);
  CHECK(max_abs_diff(v.matrix(), via_solver) < 1e-15L);

  for (int t = 0; t < 20; ++t) {
    const auto x = random_su(t % 2 == 0 ? 2 : 4, 3.0L);
    const Matrix u = cayley(x).matrix();
    CHECK((u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).norm() < 1e-12L);
    CHECK(std::abs(std::abs(u.determinant()) - 1.0L) < 1e-12L);
    if (x.dim() == 2) CHECK(std::abs(u.determinant() - 1.0L) < 1e-12L);
  }
}

TEST_CASE("inverse Cayley map") {
  CHECK(norm(cayley_inverse(UnitaryOperator::identity(2))) == 0.0L);
  Matrix v = Matrix::Zero(2, 2);
  v(0, 0) = Complex(0.6L, 0.8L);
  v(1, 1) = Complex(0.6L, -0.8L);
  CHECK(max_abs_diff(cayley_inverse(UnitaryOperator(v)).matrix(), i_pauli(2).matrix()) < 1e-14L);
  CHECK_THROWS_AS(cayley_inverse(UnitaryOperator(-Matrix::Identity(2, 2))), Error);
  for (int t = 0; t < 10; ++t) {
    const auto x = random_su(3, 2.0L);
    const auto u = cayley(x);
    CHECK(max_abs_diff(cayley(cayley_inverse(u)).matrix(), u.matrix()) < 1e-10L);
    CHECK(max_abs_diff(cayley_inverse(u).matrix(), x.matrix()) < 1e-10L);
  }
}

TEST_CASE("left trivialized differential") {
  const auto y = random_su(2);
  CHECK(max_abs_diff(dl_tau(AlgebraElement::zero(2), y).matrix(), y.matrix()) < 1e-15L);

  for (int d : {2, 3}) {
    const auto x = random_su(d), y1 = random_su(d), y2 = random_su(d);
    const Real a = uniform(), b = uniform();
    CHECK(max_abs_diff(dl_tau(x, y1 * a + y2 * b).matrix(),
                       (dl_tau(x, y1) * a + dl_tau(x, y2) * b).matrix()) < 1e-13L);

    // d/de tau(X + eY) tau(X)^{-1}, projected onto su (the identity for d = 2).
    const Real eps = 1e-5L;
    const Matrix tx_inv = cayley(x).matrix().adjoint();
    const Matrix fd = (cayley(x + y1 * eps).matrix() - cayley(x - y1 * eps).matrix()) * tx_inv / (2 * eps);
    const Matrix exact = dl_tau(x, y1).matrix();
    CHECK((project_su(fd).matrix() - exact).norm() / exact.norm() < 1e-7L);
    if (d == 2) CHECK((fd - exact).norm() / exact.norm() < 1e-7L);
  }
}

TEST_CASE("dl_tau_inverse inverts dl_tau") {
  const auto w = random_su(3);
  CHECK(max_abs_diff(dl_tau_inverse(AlgebraElement::zero(3), w).matrix(), w.matrix()) < 1e-15L);
  for (int d : {2, 3, 4}) {
    const auto x = random_su(d, 2.0L), y = random_su(d);
    CHECK(max_abs_diff(dl_tau_inverse(x, dl_tau(x, y)).matrix(), y.matrix()) < 1e-12L);
    CHECK(max_abs_diff(dl_tau(x, dl_tau_inverse(x, y)).matrix(), y.matrix()) < 1e-12L);
  }
  // Explicit 2x2 instance against a linear solve of dl_tau(X, Y) = W over su(2) coordinates.
  const auto x = random_su(2, 1.5L), w2 = random_su(2);
  const auto basis = su_basis(1);
  RealMatrix jac(3, 3);
  for (int c = 0; c < 3; ++c) jac.col(c) = coordinates(dl_tau(x, basis[static_cast<std::size_t>(c)]), basis);
  const RealVector sol = jac.fullPivLu().solve(coordinates(w2, basis));
  CHECK(max_abs_diff(combine(sol, basis, 2).matrix(), dl_tau_inverse(x, w2).matrix()) < 1e-12L);
}

TEST_CASE("right trivialized differential") {
  const auto y = random_su(2);
  CHECK(max_abs_diff(dr_tau(AlgebraElement::zero(2), y).matrix(), y.matrix()) < 1e-15L);
  for (int t = 0; t < 5; ++t) {
    const auto x = random_su(2, 2.0L), y2 = random_su(2);
    const Matrix t_x = cayley(x).matrix();
    const Matrix conj = t_x.adjoint() * dl_tau(x, y2).matrix() * t_x;
    CHECK(max_abs_diff(dr_tau(x, y2).matrix(), conj) < 1e-12L);
    CHECK(max_abs_diff(dr_tau_inverse(x, dr_tau(x, y2)).matrix(), y2.matrix()) < 1e-12L);
  }
  for (int d : {2, 3}) {
    // tau(X)^{-1} d/de tau(X + eY).
    const auto x = random_su(d), y3 = random_su(d);
    const Real eps = 1e-5L;
    const Matrix fd = cayley(x).matrix().adjoint() *
                      (cayley(x + y3 * eps).matrix() - cayley(x - y3 * eps).matrix()) / (2 * eps);
    const Matrix exact = dr_tau(x, y3).matrix();
    CHECK((project_su(fd).matrix() - exact).norm() / exact.norm() < 1e-7L);
    CHECK(max_abs_diff(dr_tau_inverse(x, dr_tau(x, y3)).matrix(), y3.matrix()) < 1e-12L);
  }
}

TEST_CASE("adjoint action") {
  const auto x = random_su(3);
  CHECK(max_abs_diff(adjoint_action(UnitaryOperator::identity(3), x).matrix(), x.matrix()) < 1e-15L);
  for (int t = 0; t < 10; ++t) {
    const auto u = cayley(random_su(3, 3.0L));
    const auto a = random_su(3), b = random_su(3);
    CHECK(inner(adjoint_action(u, a), adjoint_action(u, b)) == doctest::Approx(inner(a, b)).epsilon(1e-12L));
  }
  // Rotation by pi about x: exp(-i (pi/2) sx) flips sz.
  const UnitaryOperator rx(expm(-I * (kPi / 2) * pauli()[0]));
  CHECK(max_abs_diff(adjoint_action(rx, i_pauli(2)).matrix(), -i_pauli(2).matrix()) < 1e-14L);
}

TEST_CASE("su basis is orthonormal") {
  const auto b1 = su_basis(1);
  REQUIRE(b1.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(max_abs_diff(b1[static_cast<std::size_t>(k)].matrix(), 0.5L * i_pauli(k).matrix()) < 1e-15L);
  }
  for (int n : {1, 2, 3}) {
    const auto b = su_basis(n);
    REQUIRE(b.size() == static_cast<std::size_t>(n * (n + 2)));
    for (std::size_t i = 0; i < b.size(); ++i) {
      CHECK_NOTHROW(AlgebraElement{b[i].matrix()});
      for (std::size_t j = 0; j < b.size(); ++j) {
        CHECK(std::abs(inner(b[i], b[j]) - (i == j ? 1.0L : 0.0L)) < 1e-12L);
      }
    }
  }
  const auto x = random_su(3);
  CHECK(max_abs_diff(combine(coordinates(x, su_basis(2)), su_basis(2), 3).matrix(), x.matrix()) < 1e-14L);
}

TEST_CASE("projection onto su") {
  const auto x = random_su(3);
  CHECK(max_abs_diff(project_su(x.matrix()).matrix(), x.matrix()) < 1e-15L);
  const Matrix herm = -I * x.matrix();
  CHECK(norm(project_su(herm)) < 1e-15L);
  for (int t = 0; t < 10; ++t) {
    const Matrix a = random_matrix(3);
    const auto y = random_su(3);
    CHECK(inner(project_su(a), y) == doctest::Approx(-2.0L * (a * y.matrix()).trace().real()).epsilon(1e-12L));
  }
}

TEST_CASE("differential maps preserve algebra invariants") {
  for (int t = 0; t < 5; ++t) {
    const auto x = random_su(4, 2.0L), y = random_su(4);
    for (const auto& out : {dl_tau(x, y), dl_tau_inverse(x, y), dr_tau(x, y), dr_tau_inverse(x, y),
                            adjoint_action(cayley(x), y)}) {
      CHECK(std::abs(out.matrix().trace()) < 1e-12L);
      CHECK((out.matrix() + out.matrix().adjoint()).norm() < 1e-12L);
    }
  }
}
