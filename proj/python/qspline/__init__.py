"""Quantum spline solver.

Arrays are float64 / complex128 on this side; the C++ core works in long
double and rounds once when handing results back.
"""

import numpy as np

from ._qspline import (
    Problem,
    QsplineError,
    cayley,
    cost_and_gradient,
    distance,
    fd_gradient,
    integrate,
    lift_hamiltonian,
    load_problem,
    make_problem,
    run_cli,
    symmetric_basis,
    veronese,
)
from ._qspline import solve as _solve

__all__ = [
    "Problem",
    "QsplineError",
    "cayley",
    "cost_and_gradient",
    "distance",
    "fd_gradient",
    "integrate",
    "lift_hamiltonian",
    "load_problem",
    "make_problem",
    "run_cli",
    "solve",
    "symmetric_basis",
    "veronese",
]

_ARRAY_KEYS = ("times", "states", "hamiltonians", "cost_history", "grad_norm_history", "target_distances")


def solve(problem, **options):
    """Solve from M0 = L0 = 0; list-valued results come back as numpy arrays."""
    result = _solve(problem, **options)
    for key in _ARRAY_KEYS:
        result[key] = np.asarray(result[key])
    return result
