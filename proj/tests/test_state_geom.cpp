#include "doctest.h"
#include "test_support.hpp"

using namespace qspline;
using namespace qspline::testing;

namespace {
const Complex I(0.0L, 1.0L);

PureState phase_shifted(const PureState& psi, Real alpha) {
  return PureState(std::polar(1.0L, alpha) * psi.amplitudes());
}

PureState flowed(const AlgebraElement& a, Real eps, const PureState& psi) {
  return PureState(expm(eps * a.matrix()) * psi.amplitudes());
}

TargetList single_target(const PureState& phi, int node, Real sigma) {
  TargetList t;
  t.sigma = sigma;
  t.targets.push_back(Target{phi, 1.0L, node});
  return t;
}

// Projector onto span(basis) acting on su coordinates.
RealMatrix span_projector(const std::vector<AlgebraElement>& basis, int n) {
  const auto full = su_basis(n);
  RealMatrix b(static_cast<Eigen::Index>(full.size()), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) b.col(static_cast<Eigen::Index>(k)) = coordinates(basis[k], full);
  return b * b.transpose();
}
}  // namespace

TEST_CASE("PureState normalizes on construction") {
  Vector v(2);
  v << 3.0L, Complex(0.0L, 4.0L);
  const PureState psi(v);
  CHECK(psi.amplitudes().norm() == doctest::Approx(1.0L).epsilon(1e-15L));
  CHECK_THROWS_AS(PureState(Vector::Zero(2)), Error);
}

TEST_CASE("Fubini-Study distance") {
  const auto zero = basis_state(2, 0), one = basis_state(2, 1);
  const PureState plus(Vector::Ones(2));
  CHECK(distance(zero, zero) == 0.0L);
  CHECK(distance(zero, one) == doctest::Approx(kPi));
  CHECK(distance(plus, zero) == doctest::Approx(kPi / 2).epsilon(1e-15L));
  for (int t = 0; t < 20; ++t) {
    const auto a = random_state(3), b = random_state(3), c = random_state(3);
    CHECK(distance(a, a) < 1e-12L);
    CHECK(distance(a, b) == doctest::Approx(distance(b, a)).epsilon(1e-14L));
    CHECK(distance(phase_shifted(a, uniform(0, 6)), b) == doctest::Approx(distance(a, b)).epsilon(1e-13L));
    CHECK(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12L);
  }
}

TEST_CASE("mismatch force") {
  const auto zero = basis_state(2, 0);
  const PureState plus(Vector::Ones(2));
  CHECK(norm(mismatch_force(zero, zero)) == 0.0L);

  // <D F, E_a> = d/de D^2(e^{e E_a} psi, phi) / 2.
  const auto force = mismatch_force(zero, plus);
  for (const auto& e : su_basis(1)) {
    const Real fd = central_difference(
        [&](Real eps) { return 0.5L * std::pow(distance(flowed(e, eps, zero), plus), 2); }, 1e-5L);
    CHECK(rel_err(inner(force, e), fd, 1e-3L) < 1e-6L);
  }
  for (int n : {1, 2}) {
    for (int t = 0; t < 5; ++t) {
      const auto psi = random_state(n + 1), phi = random_state(n + 1);
      const auto f = mismatch_force(psi, phi);
      CHECK(std::abs(f.matrix().trace()) < 1e-13L);
      for (const auto& e : su_basis(n)) {
        const Real fd = central_difference(
            [&](Real eps) { return 0.5L * std::pow(distance(flowed(e, eps, psi), phi), 2); }, 1e-5L);
        CHECK(rel_err(inner(f, e), fd, 1e-3L) < 1e-6L);
      }
      const auto shifted = mismatch_force(phase_shifted(psi, 0.7L), phase_shifted(phi, -1.9L));
      CHECK(max_abs_diff(shifted.matrix(), f.matrix()) < 1e-12L);
    }
  }
  CHECK_THROWS_AS(mismatch_force(zero, basis_state(2, 1)), CutLocusError);
}

TEST_CASE("Delta_mu is supported on target nodes") {
  const auto psi = random_state(3), phi = random_state(3);
  const auto targets = single_target(phi, 7, 0.2L);
  CHECK(norm(delta_mu(6, psi, targets)) == 0.0L);
  CHECK(norm(delta_mu(7, phi, targets)) == 0.0L);
  const auto expected = mismatch_force(psi, phi) * (1.0L / 0.04L);
  CHECK(max_abs_diff(delta_mu(7, psi, targets).matrix(), expected.matrix()) < 1e-12L);

  auto antipodal = single_target(basis_state(2, 1), 3, 0.1L);
  try {
    delta_mu(3, basis_state(2, 0), antipodal);
    FAIL("expected a cut-locus error");
  } catch (const CutLocusError& e) {
    CHECK(e.node().value() == 3);
  }
}

TEST_CASE("mismatch adjoint matches finite differences of the defining pairing") {
  for (int n : {1, 2}) {
    for (int t = 0; t < 4; ++t) {
      const auto psi = random_state(n + 1), phi = random_state(n + 1);
      const auto targets = single_target(phi, 5, 0.5L);
      const auto v = random_su(n + 1);
      const auto adj = mismatch_adjoint(5, psi, v, targets);
      for (const auto& e : su_basis(n)) {
        const Real fd = central_difference(
            [&](Real eps) { return inner(delta_mu(5, flowed(e, eps, psi), targets), v); }, 1e-5L, true);
        CHECK(rel_err(inner(adj, e), fd, 1e-2L) < 1e-6L);
      }
    }
  }
  const auto psi = random_state(3), phi = random_state(3);
  const auto targets = single_target(phi, 5, 0.5L);
  CHECK(norm(mismatch_adjoint(5, psi, AlgebraElement::zero(3), targets)) == 0.0L);
  CHECK(norm(mismatch_adjoint(4, psi, random_su(3), targets)) == 0.0L);
  // Linearity in V.
  const auto v1 = random_su(3), v2 = random_su(3);
  const auto lhs = mismatch_adjoint(5, psi, v1 * 2.0L - v2 * 0.5L, targets);
  const auto rhs = mismatch_adjoint(5, psi, v1, targets) * 2.0L - mismatch_adjoint(5, psi, v2, targets) * 0.5L;
  CHECK(max_abs_diff(lhs.matrix(), rhs.matrix()) < 1e-12L);
}

TEST_CASE("mismatch adjoint near coincidence uses the analytic limit") {
  const auto phi = random_state(2);
  const auto targets = single_target(phi, 1, 1.0L);
  const auto v = random_su(2);
  const auto at = mismatch_adjoint(1, phi, v, targets);
  const auto e = su_basis(1)[0];
  const auto near = PureState(expm(1e-4L * e.matrix()) * phi.amplitudes());
  CHECK(max_abs_diff(at.matrix(), mismatch_adjoint(1, near, v, targets).matrix()) < 1e-3L);
}

TEST_CASE("stabilizer complement basis") {
  const auto b = stabilizer_perp_basis(basis_state(2, 0));
  REQUIRE(b.size() == 2);
  const auto p = span_projector(b, 1);
  RealMatrix expected = RealMatrix::Zero(3, 3);
  expected(0, 0) = expected(1, 1) = 1.0L;
  CHECK((p - expected).norm() < 1e-14L);

  for (int n : {1, 2, 3}) {
    const auto psi = random_state(n + 1);
    const auto perp = stabilizer_perp_basis(psi);
    REQUIRE(perp.size() == static_cast<std::size_t>(2 * n));
    for (std::size_t i = 0; i < perp.size(); ++i)
      for (std::size_t j = 0; j < perp.size(); ++j)
        CHECK(std::abs(inner(perp[i], perp[j]) - (i == j ? 1.0L : 0.0L)) < 1e-12L);

    // Explicit stabilizer generators: in a frame whose first vector is psi,
    // block-diagonal skew-Hermitian matrices diag(i a, B).
    Eigen::HouseholderQR<Matrix> qr(Matrix(psi.amplitudes()));
    const Matrix q = qr.householderQ();
    for (int t = 0; t < 5; ++t) {
      Matrix s = random_su(n + 1).matrix();
      s.row(0).tail(n).setZero();
      s.col(0).tail(n).setZero();
      const Matrix a_raw = q * s * q.adjoint();
      const auto a = project_su(a_raw);
      const Vector apsi = a.matrix() * psi.amplitudes();
      const Complex lambda = psi.amplitudes().dot(apsi);
      CHECK((apsi - lambda * psi.amplitudes()).norm() < 1e-12L);
      for (const auto& e : perp) CHECK(std::abs(inner(e, a)) < 1e-12L);
    }
    const auto stab = stabilizer_basis(psi);
    CHECK(stab.size() == static_cast<std::size_t>(n * n));
    const auto shifted = stabilizer_perp_basis(phase_shifted(psi, 1.3L));
    CHECK((span_projector(perp, n) - span_projector(shifted, n)).norm() < 1e-10L);
  }
}

TEST_CASE("geodesic Hamiltonian") {
  const auto zero = basis_state(2, 0), one = basis_state(2, 1);
  const auto h = geodesic_hamiltonian(zero, one, 1.0L);
  CHECK(max_abs_diff(h.matrix(), (kPi / 2) * pauli()[1]) < 1e-14L);
  const Vector reached = expm(-I * h.matrix()) * zero.amplitudes();
  CHECK(distance(PureState(reached), one) < 1e-10L);

  CHECK(h.matrix().norm() > 0.0L);
  CHECK(geodesic_hamiltonian(zero, zero, 2.0L).matrix().norm() == 0.0L);
  CHECK_THROWS_AS(geodesic_hamiltonian(zero, one, 0.0L), Error);

  for (int t = 0; t < 5; ++t) {
    const auto psi0 = random_state(3), phi1 = random_state(3);
    const Real t1 = uniform(0.5L, 3.0L);
    const auto g = geodesic_hamiltonian(psi0, phi1, t1);
    const Vector end = expm(-I * t1 * g.matrix()) * psi0.amplitudes();
    CHECK(distance(PureState(end), phi1) < 1e-10L);
  }
}

TEST_CASE("Bloch coordinates") {
  auto close = [](std::array<Real, 3> a, std::array<Real, 3> b) {
    return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]) < 1e-14L;
  };
  CHECK(close(bloch_coords(basis_state(2, 0)), {0, 0, 1}));
  CHECK(close(bloch_coords(basis_state(2, 1)), {0, 0, -1}));
  CHECK(close(bloch_coords(PureState(Vector::Ones(2))), {1, 0, 0}));
  const auto r = bloch_coords(random_state(2));
  CHECK(std::hypot(r[0], r[1], r[2]) == doctest::Approx(1.0L).epsilon(1e-12L));
  CHECK_THROWS_AS(bloch_coords(random_state(3)), DimensionError);
}

TEST_CASE("field decomposition") {
  const auto fy = field_decomposition(HermitianOperator((kPi / 2) * pauli()[1]));
  CHECK(fy.omega == doctest::Approx(kPi / 2));
  CHECK(fy.axis[1] == doctest::Approx(1.0L));
  CHECK_FALSE(fy.degenerate);

  const auto f0 = field_decomposition(HermitianOperator::zero(2));
  CHECK(f0.omega == 0.0L);
  CHECK(f0.degenerate);
  CHECK(f0.axis[2] == 1.0L);

  for (int t = 0; t < 5; ++t) {
    const auto h = random_hamiltonian(2);
    const auto f = field_decomposition(h);
    const auto s = pauli();
    const Matrix rebuilt = f.omega * (f.axis[0] * s[0] + f.axis[1] * s[1] + f.axis[2] * s[2]);
    CHECK(max_abs_diff(rebuilt, h.matrix()) < 1e-12L);
  }
}
