#include "qspline/forward.hpp"

#include <cmath>
#include <sstream>

namespace qspline {

void ProblemSpec::validate() const {
  if (n < 1) throw Error("problem: n must be positive");
  if (psi0.dim() != dim()) throw DimensionError("problem: psi0 has the wrong dimension");
  if (h0.dim() != dim()) throw DimensionError("problem: H0 has the wrong dimension");
  if (targets.targets.empty()) throw Error("problem: at least one target is required");
  targets.validate();
  const auto m = static_cast<int>(targets.targets.size());
  if (steps < m) throw Error("problem: steps must be at least the number of targets");
  if (!(t_final() > t0)) throw Error("problem: final target time must exceed t0");
  if (targets.targets.front().node <= 0) throw Error("problem: first target must lie after t0");
  if (targets.targets.back().node != steps) {
    throw Error("problem: last target must sit on the final grid point");
  }
  const Real step_h = h();
  for (const Target& t : targets.targets) {
    if (t.state.dim() != dim()) throw DimensionError("problem: target has the wrong dimension");
    if (std::abs(t0 + t.node * step_h - t.time) > 1e-9L) {
      std::ostringstream os;
      os.precision(17);
      os << "problem: target time t=" << t.time << " is not aligned with the grid (h=" << step_h
         << ")";
      throw Error(os.str());
    }
  }
}

ProblemSpec make_problem(const PureState& psi0, std::vector<std::pair<Real, PureState>> targets,
                         Real sigma, int steps, Real t0, std::optional<HermitianOperator> h0) {
  if (targets.empty()) throw Error("problem: at least one target is required");
  if (steps < 1) throw Error("problem: steps must be positive");
  if (!(sigma > 0.0L)) throw Error("problem: sigma must be positive");
  ProblemSpec spec;
  spec.n = static_cast<int>(psi0.dim()) - 1;
  spec.psi0 = psi0;
  spec.t0 = t0;
  spec.steps = steps;
  spec.targets.sigma = sigma;
  const Real t_final = targets.back().first;
  const Real step_h = (t_final - t0) / steps;
  if (!(step_h > 0.0L)) throw Error("problem: final target time must exceed t0");
  for (auto& [time, state] : targets) {
    const Real pos = (time - t0) / step_h;
    const int node = static_cast<int>(std::lround(pos));
    if (std::abs(t0 + node * step_h - time) > 1e-9L) {
      std::ostringstream os;
      os.precision(17);
      os << "problem: target time t=" << time << " is not aligned with the grid (h=" << step_h
         << ")";
      throw Error(os.str());
    }
    spec.targets.targets.push_back(Target{state, time, node});
  }
  spec.h0 = h0 ? *h0
               : geodesic_hamiltonian(psi0, spec.targets.targets.front().state,
                                      spec.targets.targets.front().time - t0);
  spec.validate();
  return spec;
}

PureState DiscretePath::state(int mu) const {
  return spec.psi0.evolved(u.at(static_cast<std::size_t>(mu)));
}

AlgebraElement DiscretePath::step_generator(int mu) const {
  return h.at(static_cast<std::size_t>(mu)).generator() * spec.h();
}

namespace {

StepState advance(int mu, const StepState& s, const ProblemSpec& spec, std::vector<CayleyFactors>* keep) {
  const Real h = spec.h();
  StepState next;
  next.h = HermitianOperator::from_generator(s.h.generator() - s.l * h);
  const AlgebraElement z = next.h.generator() * h;
  AlgebraElement w = s.m;
  if (mu > 0 && spec.targets.find_node(mu)) {
    w += delta_mu(mu, spec.psi0.evolved(s.u), spec.targets);
  }
  const CayleyFactors f(z);
  next.m = f.dl_inverse(f.dr(w));
  next.l = s.l - f.dl(next.m) * h;
  next.u = f.cayley_negated() * s.u;
  if (keep) keep->push_back(f);
  return next;
}

}  // namespace

StepState step(int mu, const StepState& s, const ProblemSpec& spec) {
  if (mu < 0 || mu >= spec.steps) throw Error("step: index out of range");
  return advance(mu, s, spec, nullptr);
}

DiscretePath integrate(const ProblemSpec& spec, const AlgebraElement& m0, const AlgebraElement& l0) {
  if (m0.dim() != spec.dim() || l0.dim() != spec.dim()) {
    throw DimensionError("integrate: initial values have the wrong dimension");
  }
  DiscretePath path;
  path.spec = spec;
  const auto count = static_cast<std::size_t>(spec.steps) + 1;
  path.u.reserve(count);
  path.h.reserve(count);
  path.m.reserve(count);
  path.l.reserve(count);
  path.factors.reserve(count);
  StepState s{UnitaryOperator::identity(spec.dim()), spec.h0, m0, l0};
  path.u.push_back(s.u);
  path.h.push_back(s.h);
  path.m.push_back(s.m);
  path.l.push_back(s.l);
  path.factors.emplace_back(s.h.generator() * spec.h());
  for (int mu = 0; mu < spec.steps; ++mu) {
    s = advance(mu, s, spec, &path.factors);
    path.u.push_back(s.u);
    path.h.push_back(s.h);
    path.m.push_back(s.m);
    path.l.push_back(s.l);
  }
  return path;
}

CostBreakdown cost_breakdown(const DiscretePath& path) {
  const Real h = path.spec.h();
  CostBreakdown out;
  for (int mu = 0; mu < path.steps(); ++mu) {
    const auto& l = path.l[static_cast<std::size_t>(mu)];
    out.hamiltonian_change += 0.5L * h * inner(l, l);
  }
  const Real s2 = path.spec.sigma() * path.spec.sigma();
  for (Real d : target_distances(path)) out.mismatch += d * d / (2.0L * s2);
  return out;
}

Real cost(const DiscretePath& path) { return cost_breakdown(path).total(); }

std::vector<Real> target_distances(const DiscretePath& path) {
  std::vector<Real> out;
  out.reserve(path.spec.targets.targets.size());
  for (const Target& t : path.spec.targets.targets) {
    out.push_back(distance(path.state(t.node), t.state));
  }
  return out;
}

std::pair<Real, Real> terminal_residual(const DiscretePath& path) {
  const int n = path.steps();
  const auto& l_n = path.l.back();
  const AlgebraElement r = path.m.back() + delta_mu(n, path.state(n), path.spec.targets);
  return {norm(l_n), norm(r)};
}

}  // namespace qspline
