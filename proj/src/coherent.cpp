#include "qspline/coherent.hpp"

#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>

namespace qspline {

namespace {

void append_occupations(int level, int n, int remaining, std::vector<int>& cur,
                        std::vector<std::vector<int>>& out) {
  if (level == n) {
    cur[level] = remaining;
    out.push_back(cur);
    return;
  }
  for (int c = remaining; c >= 0; --c) {
    cur[level] = c;
    append_occupations(level + 1, n, remaining - c, cur, out);
  }
}

void check_order(int n, int k) {
  if (n < 1) throw DimensionError("coherent: n must be >= 1");
  if (k < 1) throw Error("coherent: k must be a positive integer");
}

// One-body operator sum_ij A_ij a_i^+ a_j on the symmetric subspace.
Matrix lift_matrix(const Matrix& a, int k) {
  const int n = static_cast<int>(a.rows()) - 1;
  const auto basis = symmetric_basis(n, k);
  std::map<std::vector<int>, Eigen::Index> index;
  for (std::size_t r = 0; r < basis.size(); ++r) index.emplace(basis[r], static_cast<Eigen::Index>(r));

  const auto d = static_cast<Eigen::Index>(basis.size());
  Matrix out = Matrix::Zero(d, d);
  for (Eigen::Index col = 0; col < d; ++col) {
    const auto& occ = basis[static_cast<std::size_t>(col)];
    for (int j = 0; j <= n; ++j) {
      if (occ[j] == 0) continue;
      for (int i = 0; i <= n; ++i) {
        if (a(i, j) == Complex(0)) continue;
        if (i == j) {
          out(col, col) += a(i, i) * static_cast<Real>(occ[i]);
          continue;
        }
        auto next = occ;
        --next[j];
        ++next[i];
        const Real factor = std::sqrt(static_cast<Real>(occ[j]) * static_cast<Real>(next[i]));
        out(index.at(next), col) += a(i, j) * factor;
      }
    }
  }
  return out;
}

// exp(-i t G) for Hermitian G.
Matrix hermitian_propagator(const Matrix& g, Real t) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
  const auto& lam = eig.eigenvalues();
  Vector phases(lam.size());
  for (Eigen::Index r = 0; r < lam.size(); ++r) phases(r) = std::polar(Real(1), -t * lam(r));
  return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

// Hermitian K with exp(-i K) = tau(-i h H) exactly.
Matrix cayley_step_generator(const HermitianOperator& h, Real step) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h.matrix());
  const auto& lam = eig.eigenvalues();
  RealVector angles(lam.size());
  for (Eigen::Index r = 0; r < lam.size(); ++r) angles(r) = 2.0L * std::atan(step * lam(r) / 2.0L);
  return eig.eigenvectors() * angles.cast<Complex>().asDiagonal() * eig.eigenvectors().adjoint();
}

}  // namespace

std::vector<std::vector<int>> symmetric_basis(int n, int k) {
  check_order(n, k);
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(n + 1), 0);
  append_occupations(0, n, k, cur, out);
  return out;
}

SymmetricState::SymmetricState(int n, int k, Vector amplitudes) : n_(n), k_(k), v_(std::move(amplitudes)) {
  check_order(n, k);
  if (v_.size() != static_cast<Eigen::Index>(symmetric_basis(n, k).size()))
    throw DimensionError("SymmetricState: amplitude count does not match C(n+k, k)");
  if (std::abs(v_.norm() - 1.0L) > 1e-12L) throw InvariantError("SymmetricState: not normalized");
}

SymmetricState veronese(const PureState& psi, int k) {
  const int n = static_cast<int>(psi.dim()) - 1;
  const auto basis = symmetric_basis(n, k);
  const Vector& a = psi.amplitudes();
  Vector out(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t r = 0; r < basis.size(); ++r) {
    // log multinomial keeps large k finite
    Real log_coef = std::lgamma(static_cast<Real>(k + 1));
    Complex prod(1);
    for (int i = 0; i <= n; ++i) {
      const int ki = basis[r][i];
      log_coef -= std::lgamma(static_cast<Real>(ki + 1));
      for (int p = 0; p < ki; ++p) prod *= a(i);
    }
    out(static_cast<Eigen::Index>(r)) = std::sqrt(std::exp(log_coef)) * prod;
  }
  // The multinomial theorem makes this 1 up to round-off.
  out /= out.norm();
  return SymmetricState(n, k, std::move(out));
}

Complex overlap(const SymmetricState& a, const SymmetricState& b) {
  if (a.n() != b.n() || a.k() != b.k()) throw DimensionError("overlap: mismatched symmetric spaces");
  return a.amplitudes().dot(b.amplitudes());
}

HermitianOperator lift_hamiltonian(const HermitianOperator& h, int k) {
  check_order(static_cast<int>(h.dim()) - 1, k);
  return HermitianOperator(lift_matrix(h.matrix(), k));
}

Real metric_scale(int k) {
  check_order(1, k);
  return std::sqrt(static_cast<Real>(k));
}

CoherentTrajectory embed(const DiscretePath& path, int k) {
  CoherentTrajectory out;
  out.k = k;
  for (int mu = 0; mu <= path.steps(); ++mu) {
    out.times.push_back(path.spec.time_at(mu));
    out.states.push_back(veronese(path.state(mu), k));
  }
  return out;
}

CoherentTrajectory lifted_propagation(const DiscretePath& path, int k, LiftedStepper stepper) {
  const int n = path.spec.n;
  const Real h = path.spec.h();
  CoherentTrajectory out;
  out.k = k;
  SymmetricState cur = veronese(path.spec.psi0, k);
  out.times.push_back(path.spec.time_at(0));
  out.states.push_back(cur);
  for (int mu = 0; mu < path.steps(); ++mu) {
    const HermitianOperator& hn = path.h[static_cast<std::size_t>(mu) + 1];
    Matrix step_op;
    if (stepper == LiftedStepper::exact) {
      step_op = hermitian_propagator(lift_matrix(cayley_step_generator(hn, h), k), 1.0L);
    } else {
      const AlgebraElement x(Complex(0, -h) * lift_matrix(hn.matrix(), k));
      step_op = cayley(x).matrix();
    }
    Vector next = step_op * cur.amplitudes();
    next /= next.norm();
    cur = SymmetricState(n, k, std::move(next));
    out.times.push_back(path.spec.time_at(mu + 1));
    out.states.push_back(cur);
  }
  return out;
}

Real max_deviation(const CoherentTrajectory& a, const CoherentTrajectory& b) {
  if (a.states.size() != b.states.size()) throw DimensionError("max_deviation: trajectory lengths differ");
  Real worst = 0.0L;
  for (std::size_t i = 0; i < a.states.size(); ++i)
    worst = std::max(worst, (a.states[i].amplitudes() - b.states[i].amplitudes()).norm());
  return worst;
}

CoherentSpline coherent_spline(const ProblemSpec& spec, int k, const DescentOptions& opts) {
  check_order(spec.n, k);
  CoherentSpline out;
  out.base = solve(spec, opts);
  out.trajectory = embed(out.base.path, k);
  return out;
}

}  // namespace qspline
