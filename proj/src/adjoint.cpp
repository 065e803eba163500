#include "qspline/adjoint.hpp"

namespace qspline {
namespace {

// K-map at Zk given the factors a = 1 - Zk/2, b = 1 + Zk/2. Differentiating
// a^{-1} M b^{-1} along sh Y and moving Y to the front of the trace gives
//   R = (sh/2) (Q V a^{-1} - b^{-1} V Q),  Q = a^{-1} M b^{-1}.
AlgebraElement k_from_factors(const Matrix& a_inv, const Matrix& b_inv, const AlgebraElement& m,
                              const AlgebraElement& v, Real sh) {
  const Matrix q = a_inv * m.matrix() * b_inv;
  const Matrix& vm = v.matrix();
  return project_su(0.5L * sh * (q * vm * a_inv - b_inv * vm * q));
}

}  // namespace

AlgebraElement k_map(int sign, const AlgebraElement& x, const AlgebraElement& m,
                     const AlgebraElement& v, Real h) {
  if (sign != 1 && sign != -1) throw Error("k_map: sign must be +1 or -1");
  const Real sh = sign * h;
  const CayleyFactors f(x * sh);
  return k_from_factors(f.minus_inverse(), f.plus_inverse(), m, v, sh);
}

AdjointPath backward(const DiscretePath& path) {
  const int n_steps = path.steps();
  const Real h = path.spec.h();
  const Eigen::Index d = path.spec.dim();
  const TargetList& targets = path.spec.targets;
  const auto count = static_cast<std::size_t>(n_steps) + 1;

  // Factors of Z_mu = i h H_mu. With X = -iH_mu, the K-map with sign -1 sits
  // at Zk = Z_mu and the one with sign +1 at Zk = -Z_mu (factors swapped).
  std::vector<CayleyFactors> own;
  if (path.factors.size() != count) {
    own.reserve(count);
    for (std::size_t mu = 0; mu < count; ++mu) own.emplace_back(path.step_generator(static_cast<int>(mu)));
  }
  const std::vector<CayleyFactors>& f = own.empty() ? path.factors : own;

  std::vector<AlgebraElement> delta(count, AlgebraElement::zero(d));
  std::vector<PureState> psi(count);
  for (int mu = 1; mu <= n_steps; ++mu) {
    if (!targets.find_node(mu)) continue;
    const auto k = static_cast<std::size_t>(mu);
    psi[k] = path.state(mu);
    delta[k] = delta_mu(mu, psi[k], targets);
  }

  AdjointPath adj;
  adj.p0.assign(count, Matrix());
  adj.p1.assign(count, AlgebraElement());
  adj.v0.assign(count, AlgebraElement());
  adj.v1.assign(count, AlgebraElement());

  const auto last = static_cast<std::size_t>(n_steps);
  adj.v0[last] = AlgebraElement::zero(d);
  adj.v1[last] = AlgebraElement::zero(d);
  adj.p0[last] = (-1.0L / h) * f[last].dl_raw(delta[last].matrix());
  adj.p1[last] = project_su(adj.p0[last]) * h;

  for (int mu = n_steps - 1; mu >= 1; --mu) {
    const auto k = static_cast<std::size_t>(mu);
    const CayleyFactors& fk = f[k];
    const CayleyFactors& fnext = f[k + 1];

    adj.v0[k] = adj.v0[k + 1] + adj.p1[k + 1] * h - path.l[k];

    const AlgebraElement v1_transported = fnext.dl(adj.v1[k + 1]);
    adj.v1[k] = fk.dr_inverse(v1_transported - fk.dr(adj.v0[k]) * h);

    Matrix bracket = fnext.dr_inverse_raw(adj.p0[k + 1]);
    if (targets.find_node(mu)) {
      bracket -= delta[k].matrix() / h;
      bracket += mismatch_adjoint(mu, psi[k], v1_transported, targets).matrix();
    }
    adj.p0[k] = fk.dl_raw(bracket);

    const AlgebraElement w_prev = path.m[k - 1] + delta[k - 1];
    const AlgebraElement& mk = path.m[k];
    adj.p1[k] = adj.p1[k + 1] + project_su(adj.p0[k]) * h -
                k_from_factors(fk.minus_inverse(), fk.plus_inverse(), mk, adj.v0[k], -h) * h -
                k_from_factors(fk.minus_inverse(), fk.plus_inverse(), mk, adj.v1[k], -h) +
                k_from_factors(fk.plus_inverse(), fk.minus_inverse(), w_prev, adj.v1[k], h);
  }
  return adj;
}

Gradient gradient(const DiscretePath& path, const AdjointPath& adj) {
  const Real h = path.spec.h();
  const CayleyFactors f1 = path.factors.size() > 1 ? path.factors[1] : CayleyFactors(path.step_generator(1));
  Gradient g;
  g.wrt_m0 = f1.dl(adj.v1[1]) * (-h);
  g.wrt_l0 = (path.l[0] - adj.p1[1] * h - adj.v0[1]) * h;
  return g;
}

CostAndGradient cost_and_gradient(const ProblemSpec& spec, const AlgebraElement& m0,
                                  const AlgebraElement& l0) {
  const DiscretePath path = integrate(spec, m0, l0);
  CostAndGradient out;
  out.cost = cost(path);
  out.grad = gradient(path, backward(path));
  return out;
}

}  // namespace qspline
