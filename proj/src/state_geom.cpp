#include "qspline/state_geom.hpp"

#include <algorithm>
#include <cmath>

namespace qspline {
namespace {


void require_same_dim(const PureState& a, const PureState& b, const char* what) {
  if (a.dim() != b.dim()) throw DimensionError(std::string(what) + ": state dimension mismatch");
}

// Gram-Schmidt completion of psi against the standard basis.
std::vector<Vector> orthonormal_completion(const PureState& psi) {
  const Eigen::Index d = psi.dim();
  std::vector<Vector> frame{psi.amplitudes()};
  for (Eigen::Index k = 0; k < d && static_cast<Eigen::Index>(frame.size()) < d; ++k) {
    Vector e = Vector::Unit(d, k);
    for (const Vector& f : frame) e -= f * f.dot(e);
    for (const Vector& f : frame) e -= f * f.dot(e);
    const Real nrm = e.norm();
    if (nrm > 1e-6L) frame.push_back(e / nrm);
  }
  frame.erase(frame.begin());
  return frame;
}

}  // namespace

PureState::PureState(Vector amplitudes) {
  const Real nrm = amplitudes.norm();
  if (!(nrm > 0.0L) || !std::isfinite(nrm)) throw Error("PureState: zero or non-finite vector");
  v_ = amplitudes / nrm;
}

PureState PureState::evolved(const UnitaryOperator& u) const {
  if (u.dim() != dim()) throw DimensionError("PureState::evolved: dimension mismatch");
  return PureState(u.matrix() * v_);
}

void TargetList::validate() const {
  if (!(sigma > 0.0L)) throw Error("TargetList: sigma must be positive");
  for (std::size_t j = 1; j < targets.size(); ++j) {
    if (!(targets[j].time > targets[j - 1].time)) {
      throw Error("TargetList: target times must be strictly increasing");
    }
    if (targets[j].node <= targets[j - 1].node) {
      throw Error("TargetList: node indices must be strictly increasing");
    }
  }
}

std::optional<std::size_t> TargetList::find_node(int mu) const {
  auto it = std::lower_bound(targets.begin(), targets.end(), mu,
                             [](const Target& t, int m) { return t.node < m; });
  if (it != targets.end() && it->node == mu) {
    return static_cast<std::size_t>(it - targets.begin());
  }
  return std::nullopt;
}

Real distance(const PureState& psi, const PureState& phi) {
  require_same_dim(psi, phi, "distance");
  // 2 atan2(|phi_perp|, |<psi|phi>|) equals 2 arccos |<psi|phi>| and stays
  // accurate near 0 and pi.
  const Vector& p = psi.amplitudes();
  const Vector& f = phi.amplitudes();
  const Complex c = p.dot(f);
  const Real perp = (f - c * p).norm();
  return 2.0L * std::atan2(perp, std::abs(c));
}

AlgebraElement mismatch_force(const PureState& psi, const PureState& phi) {
  require_same_dim(psi, phi, "mismatch_force");
  const Real d = distance(psi, phi);
  if (d < kNearCoincidence) return AlgebraElement::zero(psi.dim());
  if (d >= kPi - kCutLocusMargin) {
    throw CutLocusError(
        "target at cut locus; squared distance not differentiable here "
        "(perturb the target or the initial Hamiltonian)");
  }
  const Vector& p = psi.amplitudes();
  const Vector& f = phi.amplitudes();
  const Complex c = p.dot(f);
  Matrix b = c * p * f.adjoint() - std::conj(c) * f * p.adjoint();
  return project_su((d / std::sin(d)) * b);
}

AlgebraElement delta_mu(int mu, const PureState& psi, const TargetList& targets) {
  const auto j = targets.find_node(mu);
  if (!j || mu == 0) return AlgebraElement::zero(psi.dim());
  const Real s2 = targets.sigma * targets.sigma;
  try {
    return mismatch_force(psi, targets.targets[*j].state) * (1.0L / s2);
  } catch (const CutLocusError& e) {
    throw CutLocusError(std::string(e.what()) + " [node " + std::to_string(mu) + "]", mu);
  }
}

AlgebraElement mismatch_adjoint(int mu, const PureState& psi, const AlgebraElement& v,
                                const TargetList& targets) {
  const auto j = targets.find_node(mu);
  if (!j || mu == 0) return AlgebraElement::zero(psi.dim());
  const PureState& phi = targets.targets[*j].state;
  require_same_dim(psi, phi, "mismatch_adjoint");
  const Real d = distance(psi, phi);
  if (d >= kPi - kCutLocusMargin) {
    throw CutLocusError("target at cut locus; squared distance not differentiable here", mu);
  }
  const Vector& p = psi.amplitudes();
  const Vector& f = phi.amplitudes();
  const Matrix& vm = v.matrix();
  const Complex c = p.dot(f);
  const Matrix pf = p * f.adjoint();
  const Matrix fp = f * p.adjoint();
  const Matrix b = c * pf - std::conj(c) * fp;

  // Delta = g(D) B / sigma^2 with g(D) = D / sin D.  Variation of B along
  // delta psi = A psi, rearranged as -2 Re tr(A R).
  const Complex fvp = f.dot(vm * p);
  const Complex pvf = p.dot(vm * f);
  Matrix r = -fvp * fp + c * pf * vm - pvf * pf + std::conj(c) * vm * fp;

  Real g = 1.0L;
  Matrix out = project_su(r).matrix();
  if (d >= kNearCoincidence) {
    const Real s = std::sin(d);
    g = d / s;
    const Real g_prime = (s - d * std::cos(d)) / (s * s);
    // Variation of g through delta D = inner(B / sin D, A).
    out = g * out + (g_prime * inner_raw(b, vm) / s) * project_su(b).matrix();
  }
  const Real s2 = targets.sigma * targets.sigma;
  return project_su(out / s2);
}

std::vector<AlgebraElement> stabilizer_perp_basis(const PureState& psi) {
  const Vector& p = psi.amplitudes();
  const Complex i(0.0L, 1.0L);
  std::vector<AlgebraElement> basis;
  for (const Vector& chi : orthonormal_completion(psi)) {
    const Matrix cp = chi * p.adjoint();
    const Matrix pc = p * chi.adjoint();
    basis.push_back(project_su(0.5L * (cp - pc)));
    basis.push_back(project_su(0.5L * i * (cp + pc)));
  }
  return basis;
}

std::vector<AlgebraElement> stabilizer_basis(const PureState& psi) {
  const Eigen::Index d = psi.dim();
  const auto perp = stabilizer_perp_basis(psi);
  std::vector<AlgebraElement> out;
  for (const AlgebraElement& e : su_basis(static_cast<int>(d) - 1)) {
    AlgebraElement r = e;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : perp) r -= q * inner(r, q);
      for (const auto& q : out) r -= q * inner(r, q);
    }
    const Real nrm = norm(r);
    if (nrm > 1e-6L) out.push_back(r * (1.0L / nrm));
  }
  return out;
}

HermitianOperator geodesic_hamiltonian(const PureState& psi0, const PureState& phi1, Real t1) {
  require_same_dim(psi0, phi1, "geodesic_hamiltonian");
  if (!(t1 > 0.0L)) throw Error("geodesic_hamiltonian: t1 must be positive");
  const Real theta = 0.5L * distance(psi0, phi1);
  const Eigen::Index d = psi0.dim();
  if (theta < 0.5L * kNearCoincidence) return HermitianOperator::zero(d);
  const Vector& p = psi0.amplitudes();
  // Rotate phi1's phase so <psi0|phi1> is real and nonnegative.
  const Complex ov = p.dot(phi1.amplitudes());
  const Complex phase = std::abs(ov) > 0.0L ? std::conj(ov) / std::abs(ov) : Complex(1.0L);
  const Vector f = phase * phi1.amplitudes();
  Vector chi = f - p * p.dot(f);
  chi /= chi.norm();
  const Complex i(0.0L, 1.0L);
  Matrix h = (theta / t1) * i * (chi * p.adjoint() - p * chi.adjoint());
  return HermitianOperator(std::move(h));
}

std::array<Matrix, 3> pauli() {
  Matrix sx(2, 2), sy(2, 2), sz(2, 2);
  const Complex i(0.0L, 1.0L);
  sx << 0.0L, 1.0L, 1.0L, 0.0L;
  sy << 0.0L, -i, i, 0.0L;
  sz << 1.0L, 0.0L, 0.0L, -1.0L;
  return {sx, sy, sz};
}

std::array<Real, 3> bloch_coords(const PureState& psi) {
  if (psi.dim() != 2) throw DimensionError("bloch_coords: two-level states only");
  const Complex a = psi.amplitudes()(0);
  const Complex b = psi.amplitudes()(1);
  const Complex ab = std::conj(a) * b;
  return {2.0L * ab.real(), 2.0L * ab.imag(), std::norm(a) - std::norm(b)};
}

FieldDecomposition field_decomposition(const HermitianOperator& h) {
  if (h.dim() != 2) throw DimensionError("field_decomposition: two-level Hamiltonians only");
  const auto s = pauli();
  std::array<Real, 3> comp{};
  for (int k = 0; k < 3; ++k) comp[k] = 0.5L * (h.matrix() * s[k]).trace().real();
  FieldDecomposition out;
  out.omega = std::sqrt(comp[0] * comp[0] + comp[1] * comp[1] + comp[2] * comp[2]);
  if (out.omega < 1e-14L) {
    out.degenerate = true;
    return out;
  }
  for (int k = 0; k < 3; ++k) out.axis[k] = comp[k] / out.omega;
  return out;
}

}  // namespace qspline
