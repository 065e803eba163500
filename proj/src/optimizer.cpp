#include "qspline/optimizer.hpp"

#include <cmath>
#include <deque>

#include <Eigen/Eigenvalues>
#include <memory>
#include <random>
#include <sstream>
#include <tuple>

namespace qspline {

void DescentOptions::validate() const {
  if (max_iters < 0) throw Error("descent: max_iters must be non-negative");
  if (!(grad_tol > 0.0L)) throw Error("descent: grad_tol must be positive");
  if (!(initial_step > 0.0L)) throw Error("descent: initial step must be positive");
  if (!(backtracking > 0.0L && backtracking < 1.0L)) throw Error("descent: backtracking factor must lie in (0, 1)");
  if (!(armijo > 0.0L && armijo < 1.0L)) throw Error("descent: Armijo constant must lie in (0, 1)");
  if (max_backtracks < 1) throw Error("descent: max_backtracks must be positive");
  if (lbfgs_memory < 1) throw Error("descent: lbfgs_memory must be positive");
  if (!(terminal_tol > 0.0L)) throw Error("descent: terminal_tol must be positive");
  if (continuation_from && !(*continuation_from > 0.0L)) throw Error("descent: continuation sigma must be positive");
  if (!(continuation_ratio > 0.0L && continuation_ratio < 1.0L))
    throw Error("descent: continuation ratio must lie in (0, 1)");
  if (!(continuation_grad_tol > 0.0L)) throw Error("descent: continuation_grad_tol must be positive");
  if (continuation_stage_iters < 1) throw Error("descent: continuation_stage_iters must be positive");
  if (restarts < 0) throw Error("descent: restarts must be non-negative");
  if (!(restart_scale > 0.0L)) throw Error("descent: restart_scale must be positive");
}

namespace {

using Coords = RealVector;
using CoordMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

// Cost and gradient as functions of the coordinates of (M0, L0) on
// orthonormal bases; Euclidean geometry in these coordinates matches inner().
class Objective {
 public:
  Objective(const ProblemSpec& spec, bool restrict_m0)
      : spec_(spec),
        m_basis_(restrict_m0 ? stabilizer_perp_basis(spec.psi0) : su_basis(spec.n)),
        l_basis_(su_basis(spec.n)) {}

  Eigen::Index size() const { return static_cast<Eigen::Index>(m_basis_.size() + l_basis_.size()); }

  AlgebraElement m0(const Coords& x) const {
    return combine(x.head(static_cast<Eigen::Index>(m_basis_.size())), m_basis_, spec_.dim());
  }
  AlgebraElement l0(const Coords& x) const {
    return combine(x.tail(static_cast<Eigen::Index>(l_basis_.size())), l_basis_, spec_.dim());
  }

  Real evaluate(const Coords& x, Coords& g) const {
    const auto cg = cost_and_gradient(spec_, m0(x), l0(x));
    g.resize(size());
    g << coordinates(cg.grad.wrt_m0, m_basis_), coordinates(cg.grad.wrt_l0, l_basis_);
    return cg.cost;
  }

 private:
  const ProblemSpec& spec_;
  std::vector<AlgebraElement> m_basis_;
  std::vector<AlgebraElement> l_basis_;
};

struct Run {
  Coords x;
  std::vector<Real> costs, grad_norms, steps;
  int noise_steps = 0;
  int iterations = 0;
  bool converged = false;
  bool stationary = false;
  std::string stall;  // non-empty when the line search gave up
  std::optional<CutLocusError> cut;
};

// Two-loop recursion for -H g with the usual s.y / y.y initial scaling.
Coords lbfgs_direction(const Coords& g, const std::deque<std::pair<Coords, Coords>>& memory) {
  Coords q = g;
  std::vector<Real> alpha(memory.size());
  for (std::size_t i = memory.size(); i-- > 0;) {
    const auto& [s, y] = memory[i];
    alpha[i] = s.dot(q) / y.dot(s);
    q -= alpha[i] * y;
  }
  const auto& [s_last, y_last] = memory.back();
  q *= s_last.dot(y_last) / y_last.dot(y_last);
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const auto& [s, y] = memory[i];
    const Real beta = y.dot(q) / y.dot(s);
    q += (alpha[i] - beta) * s;
  }
  return -q;
}

// Curvature model carried between Newton iterations: the eigenbasis of the
// last Hessian and its absolute eigenvalues. Probing along that basis with
// steps ~ 1/sqrt(lambda) keeps every probe's cost change comparable, which
// matters when the spectrum spans many decades.
struct NewtonModel {
  CoordMatrix basis;
  Coords curvature;
};

Coords newton_direction(const Objective& obj, const Coords& x, const Coords& g, NewtonModel& model) {
  constexpr Real kProbe = 1e-7L;
  constexpr Real kFloor = 1e-14L;  // relative eigenvalue floor
  const Eigen::Index d = x.size();
  if (model.basis.rows() != d) {
    model.basis = CoordMatrix::Identity(d, d);
    model.curvature = Coords::Ones(d);
  }
  CoordMatrix h(d, d);
  Coords gp, gm;
  for (Eigen::Index i = 0; i < d; ++i) {
    const Real step = kProbe / std::sqrt(std::max(model.curvature[i], 1.0L));
    const Coords e = model.basis.col(i) * step;
    obj.evaluate(x + e, gp);
    obj.evaluate(x - e, gm);
    h.col(i) = model.basis.transpose() * (gp - gm) / (2.0L * step);
  }
  h = (0.5L * (h + h.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<CoordMatrix> eig(h);
  model.basis = (model.basis * eig.eigenvectors()).eval();
  model.curvature = eig.eigenvalues().cwiseAbs();
  const Real floor = kFloor * std::max(model.curvature.maxCoeff(), Real(1e-300L));
  const Coords proj = model.basis.transpose() * g;
  Coords scaled(d);
  for (Eigen::Index i = 0; i < d; ++i) scaled[i] = proj[i] / std::max(model.curvature[i], floor);
  return -(model.basis * scaled);
}

std::string stall_message(int iteration, Real f, Real gnorm, Real step, Real trial) {
  std::ostringstream os;
  os.precision(17);
  os << "line search stalled at iteration " << iteration << ": cost " << f << ", gradient norm "
     << gnorm << ", last trial step " << step << " with cost " << trial;
  return os.str();
}

Run descend(const Objective& obj, const DescentOptions& opts, Coords x) {
  // Relative size of a cost change indistinguishable from evaluation round-off.
  constexpr Real kNoise = 1e-12L;
  constexpr Real kRoundoff = 1e-18L;
  Run run;
  Coords g;
  Real f = obj.evaluate(x, g);
  Real gnorm = g.norm();
  run.costs.push_back(f);
  run.grad_norms.push_back(gnorm);
  run.steps.push_back(0.0L);

  std::deque<std::pair<Coords, Coords>> memory;
  NewtonModel model;
  int it = 0;
  for (;; ++it) {
    if (gnorm < opts.grad_tol) {
      run.converged = true;
      break;
    }
    if (it >= opts.max_iters) break;

    Coords d;
    if (opts.direction == DescentDirection::newton) {
      try {
        d = newton_direction(obj, x, g, model);
      } catch (const CutLocusError&) {
        d = -g;
      }
      if (!(g.dot(d) < 0.0L)) d = -g;
      // Predicted decrease below round-off of f: nothing left to resolve.
      if (-g.dot(d) <= kRoundoff * std::max(1.0L, std::abs(f))) {
        run.stationary = true;
        break;
      }
    } else if (opts.direction == DescentDirection::lbfgs && !memory.empty()) {
      d = lbfgs_direction(g, memory);
      if (!(g.dot(d) < 0.0L)) {
        memory.clear();
        d = -g;
      }
    } else {
      d = -g;
    }
    Real alpha = opts.initial_step;
    if (opts.direction == DescentDirection::lbfgs && memory.empty()) alpha *= std::min(1.0L, 1.0L / gnorm);

    Coords xt, gt;
    Real ft = f;
    std::optional<CutLocusError> cut;
    auto backtrack = [&](const Coords& dir, Real& step) {
      const Real slope = g.dot(dir);
      const Real noise = kNoise * std::max(1.0L, std::abs(f));
      for (int k = 0; k < opts.max_backtracks; ++k, step *= opts.backtracking) {
        xt = x + step * dir;
        try {
          ft = obj.evaluate(xt, gt);
        } catch (const CutLocusError& e) {
          cut = e;
          continue;
        }
        if (ft < f && ft <= f + opts.armijo * step * slope) return true;
        // Once the predicted decrease is below round-off the Armijo test
        // carries no information; accept on a smaller gradient instead.
        if (std::abs(step * slope) <= noise && std::abs(ft - f) <= noise && gt.norm() < gnorm) {
          ++run.noise_steps;
          return true;
        }
      }
      return false;
    };
    bool accepted = backtrack(d, alpha);
    if (!accepted && opts.direction != DescentDirection::newton) {
      // Typically the round-off floor of the cost: a curvature-scaled step
      // can still shrink the gradient where the quasi-Newton model cannot.
      try {
        d = newton_direction(obj, x, g, model);
        alpha = 1.0L;
        if (g.dot(d) < 0.0L) accepted = backtrack(d, alpha);
      } catch (const CutLocusError&) {
      }
      memory.clear();
    }
    if (!accepted) {
      run.stall = stall_message(it, f, gnorm, alpha / opts.backtracking, ft);
      run.cut = cut;
      break;
    }

    Coords s = xt - x, y = gt - g;
    if (s.dot(y) > 1e-12L * s.norm() * y.norm()) {
      memory.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(memory.size()) > opts.lbfgs_memory) memory.pop_front();
    }
    x = std::move(xt);
    g = std::move(gt);
    f = ft;
    gnorm = g.norm();
    run.costs.push_back(f);
    run.grad_norms.push_back(gnorm);
    run.steps.push_back(alpha);
  }
  run.x = std::move(x);
  run.iterations = it;
  return run;
}

}  // namespace

namespace {

Solution finish(const ProblemSpec& spec, const DescentOptions& opts, const Objective& obj, Run best) {
  Solution sol;
  sol.m0 = obj.m0(best.x);
  sol.l0 = obj.l0(best.x);
  sol.path = integrate(spec, sol.m0, sol.l0);
  sol.cost_history = std::move(best.costs);
  sol.grad_norm_history = std::move(best.grad_norms);
  sol.step_history = std::move(best.steps);
  sol.noise_steps = best.noise_steps;
  sol.iterations = best.iterations;
  sol.converged = best.converged;
  sol.stationary = best.stationary;
  sol.options = opts;
  sol.report = validate(sol);
  return sol;
}

struct StageResult {
  Solution sol;
  Coords x;
  std::string stall;
  std::optional<CutLocusError> cut;
  bool cut_at_start = false;
};

StageResult run_stage(const ProblemSpec& spec, const DescentOptions& opts, const Coords* start) {
  const Objective obj(spec, opts.restrict_m0);
  Run best = descend(obj, opts, start ? *start : Coords::Zero(obj.size()));
  if (opts.seed && opts.restarts > 0) {
    std::mt19937_64 rng(*opts.seed);
    std::normal_distribution<Real> normal(0.0L, opts.restart_scale);
    for (int r = 0; r < opts.restarts; ++r) {
      Coords x0(obj.size());
      for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] = normal(rng);
      Run candidate = descend(obj, opts, std::move(x0));
      if (candidate.costs.back() < best.costs.back()) best = std::move(candidate);
    }
  }
  StageResult out;
  out.x = best.x;
  out.stall = best.stall;
  out.cut = best.cut;
  out.cut_at_start = best.cut && best.iterations == 0;
  out.sol = finish(spec, opts, obj, std::move(best));
  return out;
}

[[noreturn]] void raise_stall(StageResult&& r) {
  if (r.cut_at_start) throw *r.cut;
  const std::string message = r.stall;
  throw LineSearchError(message, std::make_shared<const Solution>(std::move(r.sol)));
}

Coords start_coords(const ProblemSpec& spec, bool restrict_m0, const AlgebraElement& m0, const AlgebraElement& l0) {
  const auto m_basis = restrict_m0 ? stabilizer_perp_basis(spec.psi0) : su_basis(spec.n);
  const auto l_basis = su_basis(spec.n);
  Coords x(static_cast<Eigen::Index>(m_basis.size() + l_basis.size()));
  x << coordinates(m0, m_basis), coordinates(l0, l_basis);
  return x;
}

ProblemSpec with_sigma(const ProblemSpec& spec, Real sigma) {
  ProblemSpec out = spec;
  out.targets.sigma = sigma;
  return out;
}

std::string continuation_message(Real sigma) {
  std::ostringstream os;
  os.precision(17);
  os << "sigma continuation stalled at sigma " << sigma;
  return os.str();
}

Solution continue_sigma(const ProblemSpec& spec, const DescentOptions& opts, const Coords* start) {
  constexpr Real kGrowth = 0.8L;      // log-step growth exponent after an accepted stage
  constexpr Real kMinLogStep = 1e-3L;
  const Real target = spec.sigma();

  DescentOptions stage_opts = opts;
  stage_opts.grad_tol = std::max(opts.grad_tol, opts.continuation_grad_tol);
  StageResult cur = run_stage(with_sigma(spec, *opts.continuation_from), stage_opts, start);
  Real sigma = *opts.continuation_from;
  std::vector<Real> sigmas{sigma};

  stage_opts.restarts = 0;
  stage_opts.max_iters = opts.continuation_stage_iters;
  DescentOptions final_opts = opts;
  final_opts.restarts = 0;

  const Real max_log_step = -std::log(opts.continuation_ratio);
  Real log_step = max_log_step;
  std::optional<std::pair<Real, Coords>> previous;
  while (sigma != target) {
    const Real gap = std::log(target / sigma);
    const bool last = std::abs(gap) <= log_step;
    const Real next_sigma = last ? target : sigma * std::exp(std::copysign(log_step, gap));
    const ProblemSpec next = with_sigma(spec, next_sigma);
    const Objective obj(next, opts.restrict_m0);

    Coords x0 = cur.x;
    if (previous) {
      const Real t = std::log(next_sigma / sigma) / std::log(sigma / previous->first);
      const Coords predicted = cur.x + t * (cur.x - previous->second);
      Coords g;
      try {
        if (obj.evaluate(predicted, g) < obj.evaluate(cur.x, g)) x0 = predicted;
      } catch (const CutLocusError&) {
      }
    }

    StageResult cand = run_stage(next, last ? final_opts : stage_opts, &x0);
    // The previous trajectory is admissible at the new sigma with its
    // mismatch reweighted; a stage above that value left the branch.
    const CostBreakdown b = cost_breakdown(cur.sol.path);
    const Real bound = b.hamiltonian_change + b.mismatch * (sigma / next_sigma) * (sigma / next_sigma);
    if (cand.sol.cost_history.back() <= bound * (1.0L + 1e-9L)) {
      previous.emplace(sigma, cur.x);
      cur = std::move(cand);
      sigma = next_sigma;
      sigmas.push_back(sigma);
      log_step = std::min(max_log_step, log_step / kGrowth);
    } else {
      log_step /= 2.0L;
      if (log_step < kMinLogStep) throw Error(continuation_message(sigma));
    }
  }
  if (sigmas.size() == 1) cur = run_stage(spec, final_opts, &cur.x);
  cur.sol.continuation_sigmas = std::move(sigmas);
  if (!cur.stall.empty()) raise_stall(std::move(cur));
  return std::move(cur.sol);
}

Solution solve_from(const ProblemSpec& spec, const DescentOptions& opts, std::optional<Coords> start) {
  spec.validate();
  opts.validate();
  if (opts.continuation_from) return continue_sigma(spec, opts, start ? &*start : nullptr);
  StageResult r = run_stage(spec, opts, start ? &*start : nullptr);
  r.sol.continuation_sigmas = {spec.sigma()};
  if (!r.stall.empty()) raise_stall(std::move(r));
  return std::move(r.sol);
}

}  // namespace

Solution solve(const ProblemSpec& spec, const DescentOptions& opts) { return solve_from(spec, opts, std::nullopt); }

Solution solve(const ProblemSpec& spec, const DescentOptions& opts, const AlgebraElement& m0,
               const AlgebraElement& l0) {
  if (m0.dim() != spec.dim() || l0.dim() != spec.dim()) {
    throw DimensionError("solve: initial values have the wrong dimension");
  }
  return solve_from(spec, opts, start_coords(spec, opts.restrict_m0, m0, l0));
}

FdGradient fd_gradient(const ProblemSpec& spec, const AlgebraElement& m0, const AlgebraElement& l0,
                       Real step, bool restrict_m0) {
  if (!(step > 0.0L)) throw Error("fd_gradient: step must be positive");
  FdGradient out;
  auto directional = [&](const std::vector<AlgebraElement>& basis, bool wrt_m0) {
    RealVector c(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const AlgebraElement e = basis[i] * step;
      const Real plus = wrt_m0 ? cost(integrate(spec, m0 + e, l0)) : cost(integrate(spec, m0, l0 + e));
      const Real minus = wrt_m0 ? cost(integrate(spec, m0 - e, l0)) : cost(integrate(spec, m0, l0 - e));
      out.integrations += 2;
      c[static_cast<Eigen::Index>(i)] = (plus - minus) / (2.0L * step);
    }
    return combine(c, basis, spec.dim());
  };
  out.grad.wrt_m0 = directional(restrict_m0 ? stabilizer_perp_basis(spec.psi0) : su_basis(spec.n), true);
  out.grad.wrt_l0 = directional(su_basis(spec.n), false);
  return out;
}

namespace {

Matrix cubic_defect(const Matrix& third, const Matrix& base, const Matrix& second) {
  return third + Complex(0.0L, 1.0L) * (base * second - second * base);
}

}  // namespace

Real cubic_residual(const DiscretePath& path, int nu) {
  if (nu < 0 || nu + 3 > path.steps()) throw Error("cubic_residual: stencil outside the grid");
  const Real h = path.spec.h();
  auto hm = [&](int mu) -> const Matrix& { return path.h[static_cast<std::size_t>(mu)].matrix(); };
  const Matrix third = (hm(nu + 3) - 3.0L * hm(nu + 2) + 3.0L * hm(nu + 1) - hm(nu)) / (h * h * h);
  const Matrix second = (hm(nu + 2) - 2.0L * hm(nu + 1) + hm(nu)) / (h * h);
  return cubic_defect(third, hm(nu), second).norm();
}

Real cubic_residual_centered(const DiscretePath& path, int nu) {
  if (nu < 1 || nu + 2 > path.steps()) throw Error("cubic_residual: stencil outside the grid");
  const Real h = path.spec.h();
  auto hm = [&](int mu) -> const Matrix& { return path.h[static_cast<std::size_t>(mu)].matrix(); };
  const Matrix d2a = hm(nu + 1) - 2.0L * hm(nu) + hm(nu - 1);
  const Matrix d2b = hm(nu + 2) - 2.0L * hm(nu + 1) + hm(nu);
  const Matrix mid = 0.5L * (hm(nu) + hm(nu + 1));
  return cubic_defect((d2b - d2a) / (h * h * h), mid, (d2a + d2b) / (2.0L * h * h)).norm();
}

ValidationReport validate(const DiscretePath& path) {
  ValidationReport rep;
  const int n_steps = path.steps();
  const Real h = path.spec.h();
  const TargetList& targets = path.spec.targets;
  const auto count = static_cast<std::size_t>(n_steps) + 1;
  auto factors = [&](int mu) {
    const auto k = static_cast<std::size_t>(mu);
    return path.factors.size() == count ? path.factors[k] : CayleyFactors(path.step_generator(mu));
  };

  std::tie(rep.terminal_l, rep.terminal_m) = terminal_residual(path);

  for (int mu = 0; mu <= n_steps; ++mu) {
    const AlgebraElement& m = path.m[static_cast<std::size_t>(mu)];
    const Real scale = std::max(1.0L, norm(m));
    for (const auto& a : stabilizer_basis(path.state(mu))) {
      rep.lemma = std::max(rep.lemma, std::abs(inner(m, a)) / scale);
    }
  }

  for (int mu = 0; mu < n_steps; ++mu) {
    const auto k = static_cast<std::size_t>(mu);
    const CayleyFactors f = factors(mu + 1);
    const AlgebraElement r = path.l[k + 1] - path.l[k] + f.dl(path.m[k + 1]) * h;
    rep.l_continuity = std::max(rep.l_continuity, norm(r));
    if (mu > 0 && targets.find_node(mu)) {
      const AlgebraElement delta = delta_mu(mu, path.state(mu), targets);
      const AlgebraElement w = f.dr_inverse(f.dl(path.m[k + 1]));
      rep.node_jump = std::max(rep.node_jump, norm(w - path.m[k] - delta) / std::max(1.0L, norm(delta)));
    }
  }

  // Stencils reaching across a node see the M jump and are skipped.
  auto near_node = [&](int lo, int hi) {
    for (const auto& t : targets.targets)
      if (t.node >= lo && t.node <= hi) return true;
    return false;
  };
  for (int nu = 0; nu + 3 <= n_steps; ++nu) {
    if (near_node(nu - 1, nu + 3)) continue;
    rep.cubic = std::max(rep.cubic, cubic_residual(path, nu));
    ++rep.cubic_points;
  }
  for (int nu = 1; nu + 2 <= n_steps; ++nu) {
    if (near_node(nu - 1, nu + 2)) continue;
    rep.cubic_centered = std::max(rep.cubic_centered, cubic_residual_centered(path, nu));
  }
  return rep;
}

ValidationReport validate(const Solution& sol) {
  ValidationReport rep = validate(sol.path);
  rep.grad_norm = sol.grad_norm_history.empty() ? 0.0L : sol.grad_norm_history.back();
  rep.gradient_converged = rep.grad_norm < sol.options.grad_tol;
  rep.terminal_converged = std::max(rep.terminal_l, rep.terminal_m) < sol.options.terminal_tol;
  rep.disagreement = rep.gradient_converged && !rep.terminal_converged;
  return rep;
}

ProblemSpec refine(const ProblemSpec& spec, int factor) {
  if (factor < 1) throw Error("refine: factor must be positive");
  ProblemSpec out = spec;
  out.steps *= factor;
  for (auto& t : out.targets.targets) t.node *= factor;
  out.validate();
  return out;
}

RefinementStudy refinement_study(const ProblemSpec& spec, const DescentOptions& opts, int levels) {
  if (levels < 3) throw Error("refinement_study: at least three levels are needed");
  RefinementStudy study;
  std::optional<Solution> previous;
  for (int l = 0; l < levels; ++l) {
    // (M0, L0) carry over between grids up to O(h), so each level warm-starts.
    const ProblemSpec level = refine(spec, 1 << l);
    Solution sol = previous ? solve(level, opts, previous->m0, previous->l0) : solve(level, opts);
    study.steps.push_back(sol.path.steps());
    study.costs.push_back(sol.cost_history.back());
    study.cubic.push_back(sol.report.cubic);
    study.cubic_centered.push_back(sol.report.cubic_centered);
    previous = std::move(sol);
  }
  const auto k = study.costs.size();
  study.cost_order = std::log2(std::abs(study.costs[k - 3] - study.costs[k - 2]) /
                               std::abs(study.costs[k - 2] - study.costs[k - 1]));
  study.cubic_order = std::log2(study.cubic[k - 2] / study.cubic[k - 1]);
  study.cubic_centered_order = std::log2(study.cubic_centered[k - 2] / study.cubic_centered[k - 1]);
  return study;
}

}  // namespace qspline
