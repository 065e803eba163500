#pragma once

// Shared helpers for the test suites: seeded random generators and
// independent oracles (matrix exponential, finite differences).

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "qspline/adjoint.hpp"
#include "qspline/lie_core.hpp"
#include "qspline/state_geom.hpp"

namespace qspline::testing {

using RealMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20240611);
  return gen;
}

inline Real uniform(Real lo = -1.0L, Real hi = 1.0L) {
  return std::uniform_real_distribution<Real>(lo, hi)(rng());
}

inline Matrix random_matrix(Eigen::Index d, Real scale = 1.0L) {
  Matrix a(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) a(r, c) = Complex(uniform(), uniform()) * scale;
  return a;
}

inline AlgebraElement random_su(Eigen::Index d, Real scale = 1.0L) {
  return project_su(random_matrix(d, scale));
}

inline HermitianOperator random_hamiltonian(Eigen::Index d, Real scale = 1.0L) {
  return HermitianOperator::from_generator(random_su(d, scale));
}

inline PureState random_state(Eigen::Index d) {
  Vector v(d);
  for (Eigen::Index k = 0; k < d; ++k) v(k) = Complex(uniform(), uniform());
  return PureState(v);
}

inline Matrix expm(const Matrix& a) { return a.exp(); }

inline PureState basis_state(Eigen::Index d, Eigen::Index k) { return PureState(Vector::Unit(d, k)); }

/// Two-level state from Bloch angles.
inline PureState bloch_state(Real theta, Real phi) {
  Vector v(2);
  v << std::cos(theta / 2), std::polar(std::sin(theta / 2), phi);
  return PureState(v);
}

/// Central difference of f at 0, optionally Richardson-extrapolated.
template <class F>
Real central_difference(F&& f, Real eps, bool richardson = false) {
  const Real d1 = (f(eps) - f(-eps)) / (2 * eps);
  if (!richardson) return d1;
  const Real d2 = (f(eps / 2) - f(-eps / 2)) / eps;
  return (4 * d2 - d1) / 3;
}

inline Real rel_err(Real a, Real b, Real floor = 1.0L) {
  return std::abs(a - b) / std::max(floor, std::max(std::abs(a), std::abs(b)));
}

inline Real max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Random multi-target problem with well-separated node indices.
inline ProblemSpec random_problem(int n, int m, int steps, Real t_final = 2.0L, Real sigma = 0.3L) {
  const Eigen::Index d = n + 1;
  std::vector<std::pair<Real, PureState>> targets;
  for (int j = 1; j <= m; ++j) {
    const int node = steps * j / m;
    targets.emplace_back(t_final * node / steps, random_state(d));
  }
  return make_problem(random_state(d), std::move(targets), sigma, steps, 0.0L, random_hamiltonian(d));
}

}  // namespace qspline::testing
