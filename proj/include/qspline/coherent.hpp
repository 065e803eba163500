#pragma once

// Coherent (symmetric k-particle) splines: the Veronese embedding of
// single-particle states, the one-body lift of a Hamiltonian to the
// symmetric subspace, and embedded trajectories.
//
// Symmetric basis order: occupation vectors (k_0, ..., k_n) with
// sum k_i = k, lexicographically decreasing (k_0 first).

#include <vector>

#include "qspline/optimizer.hpp"

namespace qspline {

/// Occupation vectors of the symmetric k-particle space over n + 1 levels,
/// C(n + k, k) of them, in the fixed order above.
std::vector<std::vector<int>> symmetric_basis(int n, int k);

/// Normalized amplitudes over symmetric_basis(n, k).
class SymmetricState {
 public:
  SymmetricState() = default;
  /// Throws InvariantError unless the norm is 1 within 1e-12.
  SymmetricState(int n, int k, Vector amplitudes);

  int n() const { return n_; }
  int k() const { return k_; }
  const Vector& amplitudes() const { return v_; }

 private:
  int n_ = 0;
  int k_ = 0;
  Vector v_;
};

/// Amplitude on (k_0..k_n) is sqrt(k! / prod k_i!) prod psi_i^{k_i}.
SymmetricState veronese(const PureState& psi, int k);

/// <a|b>.
Complex overlap(const SymmetricState& a, const SymmetricState& b);

/// sum_ij H_ij a_i^+ a_j restricted to the symmetric subspace, assembled
/// from bosonic one-body matrix elements.
HermitianOperator lift_hamiltonian(const HermitianOperator& h, int k);

/// Infinitesimal ratio of Fubini-Study lengths between the embedded and the
/// base trajectory, implied by the overlap law: sqrt(k). Informational only.
Real metric_scale(int k);

struct CoherentTrajectory {
  int k = 1;
  std::vector<Real> times;
  std::vector<SymmetricState> states;
};

/// veronese(U_mu psi0, k) at every grid point.
CoherentTrajectory embed(const DiscretePath& path, int k);

enum class LiftedStepper {
  /// Per step, the exact one-body generator of tau(-ihH_{mu+1}) (phases
  /// 2 atan(h lambda / 2) on the eigenspaces of H_{mu+1}), lifted and exponentiated.
  exact,
  /// Cayley map of the lifted generator, tau(-ih lift(H_{mu+1})). Not
  /// equivariant: the per-step phases differ at O(h^3), O(h^2) over a fixed horizon.
  cayley,
};

/// Propagates veronese(psi0, k) with the lifted Hamiltonian path.
CoherentTrajectory lifted_propagation(const DiscretePath& path, int k, LiftedStepper stepper);

/// max_mu ||a_mu - b_mu|| (no phase alignment).
Real max_deviation(const CoherentTrajectory& a, const CoherentTrajectory& b);

struct CoherentSpline {
  Solution base;
  CoherentTrajectory trajectory;
};

/// Solves the single-particle problem and embeds the resulting trajectory.
CoherentSpline coherent_spline(const ProblemSpec& spec, int k, const DescentOptions& opts = {});

}  // namespace qspline
