"""First eigenvalue of the 1D p-Laplacian with zero boundary values.

The eigenvalue is the minimum of the Rayleigh quotient

    R(u) = sum_cells h |slope(u)|^p  /  trapezoid(|u|^p)

over nonzero grid functions.  :func:`first_eigenpair` minimizes it by inverse
power iteration: repeatedly solve the frozen problem

    -(|u'|^{p-2} u')' = lam_k * u_k^{p-1}

renormalize to unit L^p norm, and update lam with the Rayleigh quotient. The
quotient is non-increasing along this iteration (up to solver tolerance) and
positive starting data stays in the positive cone, so the iteration lands on
the first eigenpair rather than a higher mode.

:func:`check_supersolution` certifies the nodal weak inequality
-(|v'|^{p-2} v')' >= lam * v^{p-1}, the discrete meaning of a positive
supersolution at level lam.  The supremum of certifiable levels equals the
first eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CONVERGED, SolverConfig, _check_p, solve_p_poisson, weak_residual
from .grid import Grid, GridFunction, lp_norm, sup_norm, w1p_seminorm

__all__ = [
    "EigenResult",
    "SupersolutionCertificate",
    "first_eigenpair",
    "rayleigh_quotient",
    "check_supersolution",
    "positive_bubble",
]


@dataclass(frozen=True)
class EigenResult:
    """First eigenvalue, its positive eigenfunction (unit L^p norm), the
    Rayleigh-quotient history and the number of outer iterations."""

    lambda1: float
    eigenfunction: GridFunction
    rayleigh_history: tuple[float, ...]
    iterations: int


@dataclass(frozen=True)
class SupersolutionCertificate:
    holds: bool
    worst_node: int
    margin: float


def rayleigh_quotient(u: GridFunction, p: float) -> float:
    """w1p_seminorm(u, p)^p / lp_norm(u, p)^p; 0-homogeneous in u."""
    if sup_norm(u) == 0.0:
        raise ValueError("zero-function: Rayleigh quotient needs a nonzero function")
    return float(w1p_seminorm(u, p) ** p / lp_norm(u, p) ** p)


def positive_bubble(grid: Grid) -> GridFunction:
    """Nodal values of (x - a)(b - x), the default positive start vector."""
    x = grid.nodes()
    v = (x - grid.a) * (grid.b - x)
    v[0] = 0.0
    v[-1] = 0.0
    return GridFunction(grid, v)


def first_eigenpair(
    p: float,
    grid: Grid,
    cfg: SolverConfig = SolverConfig(),
    start: GridFunction | None = None,
    max_outer: int = 400,
) -> EigenResult:
    """Inverse power iteration for the first eigenpair.

    Stops once the relative Rayleigh change drops below cfg.tol_step and the
    nodal residual of the eigenvalue equation is below ten times the solver
    residual tolerance.  Raises on max_outer exhaustion or if an inner solve
    fails.
    """
    _check_p(p)
    if start is None:
        start = positive_bubble(grid)
    if np.any(start.interior() <= 0.0):
        raise ValueError("not-positive: start vector must be positive at interior nodes")
    u = GridFunction(grid, start.values / lp_norm(start, p))
    lam = rayleigh_quotient(u, p)
    history = [lam]

    def eigen_rhs(v: GridFunction, level: float) -> GridFunction:
        return GridFunction(grid, level * v.values ** (p - 1.0))

    for k in range(1, max_outer + 1):
        rhs = eigen_rhs(u, lam)
        v, rep = solve_p_poisson(rhs, p, cfg, init=u)
        if rep.status != CONVERGED:
            raise RuntimeError(
                f"max-iters: inner solve returned {rep.status} at outer step {k}"
            )
        u_new = GridFunction(grid, v.values / lp_norm(v, p))
        lam_new = rayleigh_quotient(u_new, p)
        history.append(lam_new)
        lam_gap = abs(lam_new - lam)
        u, lam = u_new, lam_new
        res = sup_norm(weak_residual(u, p, eigen_rhs(u, lam)))
        if lam_gap <= cfg.tol_step * lam and res <= 10.0 * cfg.tol_residual * (1.0 + lam):
            break
    else:
        raise RuntimeError(
            f"max-iters: eigen iteration did not converge within {max_outer} steps"
        )

    if np.any(u.interior() <= 0.0):
        raise RuntimeError("not-positive: iteration left the positive cone")
    return EigenResult(
        lambda1=lam,
        eigenfunction=u,
        rayleigh_history=tuple(history),
        iterations=k,
    )


def check_supersolution(
    v: GridFunction,
    lam: float,
    p: float,
    tol_residual: float = 1e-10,
) -> SupersolutionCertificate:
    """Certify the nodal weak inequality for a positive candidate.

    holds is true when every interior residual of the equation with
    right-hand side lam * v^{p-1} is >= -tol_residual; margin is the minimum
    nodal residual and worst_node the (absolute) node index attaining it.
    """
    if lam < 0:
        raise ValueError(f"invalid-level: lam must be >= 0, got {lam}")
    if np.any(v.interior() <= 0.0):
        raise ValueError("not-positive: candidate must be positive at interior nodes")
    rhs = GridFunction(v.grid, lam * v.values ** (p - 1.0))
    r = weak_residual(v, p, rhs).interior()
    worst = int(np.argmin(r))
    margin = float(r[worst])
    return SupersolutionCertificate(
        holds=margin >= -tol_residual,
        worst_node=worst + 1,
        margin=margin,
    )
