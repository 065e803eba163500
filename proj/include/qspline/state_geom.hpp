#pragma once

// Pure-state geometry on CP^n: Fubini-Study distance, mismatch forces and
// their adjoint, stabilizer complements, geodesic Hamiltonians, and the
// Bloch-sphere picture for two-level systems.

#include <array>
#include <optional>
#include <vector>

#include "qspline/lie_core.hpp"

namespace qspline {

/// Raised when the evolving state sits on the cut locus of a target
/// (distance ~ pi), where the squared distance is not differentiable.
class CutLocusError : public Error {
 public:
  explicit CutLocusError(const std::string& what, std::optional<int> node = std::nullopt)
      : Error(what), node_(node) {}
  std::optional<int> node() const { return node_; }

 private:
  std::optional<int> node_;
};

/// Normalized complex amplitude vector.
class PureState {
 public:
  PureState() = default;
  /// Normalizes; throws on a zero (or non-finite) vector.
  explicit PureState(Vector amplitudes);

  const Vector& amplitudes() const { return v_; }
  Eigen::Index dim() const { return v_.size(); }

  /// U |psi>, re-normalized.
  PureState evolved(const UnitaryOperator& u) const;

 private:
  Vector v_;
};

/// Distance below which the mismatch force is returned as exactly zero.
inline constexpr Real kNearCoincidence = 1e-9L;
/// Distance to pi at which the cut-locus error is raised.
inline constexpr Real kCutLocusMargin = 1e-6L;

struct Target {
  PureState state;
  Real time = 0.0L;
  int node = 0;
};

/// Ordered targets with strictly increasing times and node indices, plus
/// the tolerance sigma.
struct TargetList {
  std::vector<Target> targets;
  Real sigma = 1.0L;

  /// Throws Error when times or nodes are not strictly increasing or sigma <= 0.
  void validate() const;
  /// Index j with targets[j].node == mu, if any.
  std::optional<std::size_t> find_node(int mu) const;
};

/// 2 arccos |<psi|phi>|, in [0, pi].
Real distance(const PureState& psi, const PureState& phi);

/// D * F with F the Fubini-Study mismatch force,
///   F = (<psi|phi>|psi><phi| - <phi|psi>|phi><psi|) / sin D,
/// so that d/de D^2(e^{eA} psi, phi) = 2 inner(D F, A).
AlgebraElement mismatch_force(const PureState& psi, const PureState& phi);

/// Delta_mu: D_j F_j / sigma^2 when mu is the node of target j, else 0.
AlgebraElement delta_mu(int mu, const PureState& psi, const TargetList& targets);

/// Unique A_mu(psi, V) with inner(A_mu, A) = d/de inner(Delta_mu(e^{eA} psi), V).
AlgebraElement mismatch_adjoint(int mu, const PureState& psi, const AlgebraElement& v,
                                const TargetList& targets);

/// Orthonormal basis (2n elements) of the complement of the generators that
/// fix the ray of psi.
std::vector<AlgebraElement> stabilizer_perp_basis(const PureState& psi);
/// Orthonormal basis (n^2 elements) of the ray stabilizer: A psi = i lambda psi.
std::vector<AlgebraElement> stabilizer_basis(const PureState& psi);

/// Constant Hamiltonian whose flow carries psi0 along the geodesic to the
/// ray of phi1 in time t1.
HermitianOperator geodesic_hamiltonian(const PureState& psi0, const PureState& phi1, Real t1);

/// Bloch vector (<sx>, <sy>, <sz>); two-level states only.
std::array<Real, 3> bloch_coords(const PureState& psi);

struct FieldDecomposition {
  Real omega = 0.0L;
  std::array<Real, 3> axis{0.0L, 0.0L, 1.0L};
  /// omega below 1e-14: axis is the (0, 0, 1) placeholder.
  bool degenerate = false;
};

/// H = omega sigma.n for a two-level Hamiltonian.
FieldDecomposition field_decomposition(const HermitianOperator& h);

/// Pauli matrices sigma_x, sigma_y, sigma_z.
std::array<Matrix, 3> pauli();

}  // namespace qspline
