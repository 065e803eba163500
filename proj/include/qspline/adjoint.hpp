#pragma once

// Exact gradient of the discrete cost with respect to (M0, L0) by a single
// backward sweep of the adjoint (Lagrange multiplier) recursion.

#include <vector>

#include "qspline/forward.hpp"

namespace qspline {

/// K^{+-}_{(X, M)} V, defined by
///   inner(K V, Y) = d/de inner(d_l tau_{+-h(X + eY)} M, V) at e = 0.
/// sign must be +1 or -1.
AlgebraElement k_map(int sign, const AlgebraElement& x, const AlgebraElement& m,
                     const AlgebraElement& v, Real h);

/// Multipliers for mu = 1..N (index 0 is unused and left empty).
///
/// P0 multiplies the u(n+1)-valued group constraint and therefore keeps a
/// trace part when n >= 2; it is stored as a raw skew-Hermitian matrix.
struct AdjointPath {
  std::vector<Matrix> p0;
  std::vector<AlgebraElement> p1;
  std::vector<AlgebraElement> v0;
  std::vector<AlgebraElement> v1;
};

struct Gradient {
  AlgebraElement wrt_m0;
  AlgebraElement wrt_l0;
};

/// Final-time conditions at mu = N, then the backward recursion to mu = 1.
AdjointPath backward(const DiscretePath& path);

/// grad_M0 = -h d_r tau_{-ihH_1} V1_1, grad_L0 = h (L0 - h P1_1 - V0_1).
Gradient gradient(const DiscretePath& path, const AdjointPath& adj);

struct CostAndGradient {
  Real cost = 0.0L;
  Gradient grad;
};

/// Forward integration, cost, backward sweep and gradient assembly.
CostAndGradient cost_and_gradient(const ProblemSpec& spec, const AlgebraElement& m0,
                                  const AlgebraElement& l0);

}  // namespace qspline
