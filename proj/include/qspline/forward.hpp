#pragma once

// Discrete equations of motion on the uniform node-aligned grid and the
// discrete cost functional.

#include <utility>
#include <vector>

#include "qspline/state_geom.hpp"

namespace qspline {

/// Complete problem statement: initial state, targets, tolerance, grid and
/// initial Hamiltonian.
struct ProblemSpec {
  int n = 1;  ///< Hilbert space dimension is n + 1.
  PureState psi0;
  TargetList targets;
  Real t0 = 0.0L;
  int steps = 0;  ///< N
  HermitianOperator h0;

  Eigen::Index dim() const { return n + 1; }
  Real t_final() const { return targets.targets.back().time; }
  Real h() const { return (t_final() - t0) / steps; }
  Real time_at(int mu) const { return t0 + mu * h(); }
  Real sigma() const { return targets.sigma; }

  /// Checks the grid invariants: n_0 = 0 < n_1 < ... < n_m = N, every
  /// t_j = t0 + n_j h within 1e-9, sigma > 0, N >= m, consistent dimensions.
  void validate() const;
};

/// Builds a validated spec, assigning each target the grid node of its time.
/// Throws Error naming the offending time when it is not grid-aligned.
/// Without h0 the geodesic Hamiltonian toward the first target is used.
ProblemSpec make_problem(const PureState& psi0, std::vector<std::pair<Real, PureState>> targets,
                         Real sigma, int steps, Real t0 = 0.0L,
                         std::optional<HermitianOperator> h0 = std::nullopt);

struct StepState {
  UnitaryOperator u;
  HermitianOperator h;
  AlgebraElement m;
  AlgebraElement l;
};

/// Forward solution: U, H, M, L for mu = 0..N.
struct DiscretePath {
  ProblemSpec spec;
  std::vector<UnitaryOperator> u;
  std::vector<HermitianOperator> h;
  std::vector<AlgebraElement> m;
  std::vector<AlgebraElement> l;
  /// Cayley factors of i h H_mu, filled by integrate and reused by the backward pass.
  /// Leave empty (or clear) after editing h by hand.
  std::vector<CayleyFactors> factors;

  int steps() const { return spec.steps; }
  /// psi_mu = U_mu psi0.
  PureState state(int mu) const;
  /// i h H_mu.
  AlgebraElement step_generator(int mu) const;
};

/// One step mu -> mu + 1, evaluated in dependency order:
/// H' = H + i h L, Delta = Delta_mu(U psi0),
/// M' = d_l tau^{-1}_{ihH'} d_l tau_{-ihH'} (M + Delta),
/// L' = L - h d_l tau_{ihH'} M', U' = tau(-ihH') U.
StepState step(int mu, const StepState& s, const ProblemSpec& spec);

DiscretePath integrate(const ProblemSpec& spec, const AlgebraElement& m0, const AlgebraElement& l0);

/// Discrete cost split into its two terms.
struct CostBreakdown {
  Real hamiltonian_change = 0.0L;  ///< sum (h/2) <L_mu, L_mu>, mu < N
  Real mismatch = 0.0L;            ///< (1/2 sigma^2) sum_j D_j^2
  Real total() const { return hamiltonian_change + mismatch; }
};

CostBreakdown cost_breakdown(const DiscretePath& path);
Real cost(const DiscretePath& path);

/// Node distances D_j = D(U_{n_j} psi0, phi_j).
std::vector<Real> target_distances(const DiscretePath& path);

/// (|L_N|, |M_N + Delta_N(psi_N)|).
std::pair<Real, Real> terminal_residual(const DiscretePath& path);

}  // namespace qspline
