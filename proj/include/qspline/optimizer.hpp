#pragma once

// Descent over the initial conditions (M0, L0), the finite-difference
// gradient oracle, and post-hoc validation of a computed spline.

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "qspline/adjoint.hpp"

namespace qspline {

enum class DescentDirection {
  steepest,  ///< plain negative gradient
  lbfgs,     ///< limited-memory BFGS two-loop recursion
  /// Newton on a finite-difference Hessian of the adjoint gradient, with
  /// eigenvalues replaced by their absolute values. Costs 2 d + 1 gradients
  /// per iteration in d coordinates; meant for the badly conditioned
  /// small-sigma regime.
  newton,
};

struct DescentOptions {
  int max_iters = 1000;
  Real grad_tol = 1e-9L;
  Real initial_step = 1.0L;
  Real backtracking = 0.5L;  ///< beta
  Real armijo = 1e-4L;       ///< c
  int max_backtracks = 60;
  bool restrict_m0 = true;
  DescentDirection direction = DescentDirection::lbfgs;
  int lbfgs_memory = 8;
  /// Terminal residual threshold used to cross-check gradient convergence.
  Real terminal_tol = 1e-6L;
  /// Multi-start: with a seed, `restarts` extra random initial points are
  /// tried after the zero start and the lowest final cost wins.
  std::optional<std::uint64_t> seed;
  int restarts = 0;
  Real restart_scale = 0.1L;
  /// Tolerance continuation: when set, the problem is first solved at this
  /// sigma and then at a geometric sequence of sigmas ending at the spec's
  /// own, each stage warm-started from a secant prediction. A stage is
  /// rejected, and the sigma step halved in log scale, when its cost exceeds
  /// what the previous stage's trajectory costs at the new sigma. Histories
  /// cover the final stage only.
  std::optional<Real> continuation_from;
  /// Initial ratio between successive sigmas (in (0, 1); inverted when
  /// continuing upward).
  Real continuation_ratio = 0.9L;
  /// Gradient tolerance and iteration cap of intermediate stages.
  Real continuation_grad_tol = 1e-6L;
  int continuation_stage_iters = 40;

  /// Throws Error on non-positive values or beta, c, ratio outside (0, 1).
  void validate() const;
};

struct ValidationReport {
  Real terminal_l = 0.0L;        ///< ||L_N||
  Real terminal_m = 0.0L;        ///< ||M_N + Delta_N||
  Real lemma = 0.0L;             ///< max |inner(M_mu, A)| / max(1, ||M_mu||), A in stab(psi_mu)
  Real l_continuity = 0.0L;      ///< max ||L_{mu+1} - L_mu + h d_l tau_{Z_{mu+1}} M_{mu+1}||
  Real node_jump = 0.0L;         ///< max over interior nodes of the re-derived M jump minus Delta
  Real cubic = 0.0L;             ///< max forward-stencil cubic residual away from nodes
  int cubic_points = 0;           ///< stencils entering `cubic`
  Real cubic_centered = 0.0L;    ///< same with the centered stencil
  Real grad_norm = 0.0L;
  bool gradient_converged = false;
  bool terminal_converged = false;
  /// Gradient says converged but the terminal conditions do not hold.
  bool disagreement = false;
};

struct Solution {
  AlgebraElement m0;
  AlgebraElement l0;
  DiscretePath path;
  std::vector<Real> cost_history;       ///< one entry per iterate, starting at iteration 0
  std::vector<Real> grad_norm_history;
  std::vector<Real> step_history;       ///< accepted step length (0 at iteration 0)
  /// Steps accepted at round-off level (no measurable cost change but a smaller gradient).
  int noise_steps = 0;
  int iterations = 0;
  bool converged = false;
  /// Newton stopped because its predicted decrease fell below the round-off
  /// of the cost; the gradient norm is then at its evaluation noise floor.
  bool stationary = false;
  /// Sigmas of the accepted continuation stages, ending with the spec's.
  std::vector<Real> continuation_sigmas;
  DescentOptions options;
  ValidationReport report;
};

/// Thrown when backtracking cannot find a decrease. Carries the solution at
/// the last accepted iterate, histories included.
class LineSearchError : public Error {
 public:
  LineSearchError(const std::string& what, std::shared_ptr<const Solution> partial)
      : Error(what), partial_(std::move(partial)) {}
  const Solution& partial() const { return *partial_; }

 private:
  std::shared_ptr<const Solution> partial_;
};

/// Armijo-backtracked descent from M0 = L0 = 0 (plus optional random
/// restarts and sigma continuation). Throws Error when continuation cannot
/// make progress.
Solution solve(const ProblemSpec& spec, const DescentOptions& opts = {});
/// Same, warm-started from (m0, l0). With restrict_m0, m0 is first projected
/// onto the complement of the stabilizer of psi0.
Solution solve(const ProblemSpec& spec, const DescentOptions& opts, const AlgebraElement& m0,
               const AlgebraElement& l0);

struct FdGradient {
  Gradient grad;
  int integrations = 0;  ///< forward integrations spent, 2 per direction
};

/// Central differences of cost o integrate along every basis direction of
/// L0 and of M0 (the 2n directions orthogonal to the stabilizer of psi0 when
/// restrict_m0). Directions are evaluated in basis order.
FdGradient fd_gradient(const ProblemSpec& spec, const AlgebraElement& m0, const AlgebraElement& l0,
                       Real step, bool restrict_m0 = false);

/// Residuals of a computed path (certification fields left at defaults).
ValidationReport validate(const DiscretePath& path);
/// Path residuals plus the gradient / terminal-condition cross-check.
ValidationReport validate(const Solution& sol);

/// Residual of d3H + i [H, d2H] = 0 from forward differences anchored at nu:
/// third difference over H_nu..H_nu+3, commutator with H_nu and the second
/// difference over H_nu..H_nu+2. The stencils are offset from each other, so
/// this is O(h) even for exact data.
Real cubic_residual(const DiscretePath& path, int nu);
/// Same equation with both differences centered between nu and nu + 1
/// (H_nu-1..H_nu+2); O(h^2) truncation.
Real cubic_residual_centered(const DiscretePath& path, int nu);

/// Same targets and H0 on a grid refined by an integer factor.
ProblemSpec refine(const ProblemSpec& spec, int factor);

struct RefinementStudy {
  std::vector<int> steps;
  std::vector<Real> costs;
  std::vector<Real> cubic;
  std::vector<Real> cubic_centered;
  Real cost_order = 0.0L;   ///< log2 of successive cost-difference ratios (last pair)
  Real cubic_order = 0.0L;  ///< log2 of the last cubic-residual ratio
  Real cubic_centered_order = 0.0L;
};

/// Solves on N, 2N, ..., 2^(levels-1) N and reports observed orders.
RefinementStudy refinement_study(const ProblemSpec& spec, const DescentOptions& opts, int levels = 3);

}  // namespace qspline
