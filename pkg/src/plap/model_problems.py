"""Auxiliary problems: the pure-concave and the linear-concave equations.

Two coercive minimization problems feed the threshold analysis:

  * concave:         -(|w'|^{p-2}w')' = Lam * w^{q-1}
  * linear-concave:  -(|u'|^{p-2}u')' = lam * u^{p-1} + coeff * u^{q-1}

with 1 < q < p and, for the second problem, 0 <= lam < lambda1 so that the
energy stays coercive.  Both are solved by minimizing the full energy with a
majorize-minimize sweep: the zero-order potential is convex, so freezing the
right-hand side at the current iterate majorizes the energy, each step is one
frozen-RHS solve, and the energy decreases monotonically.  Iterates stay in
the positive cone and the sweep converges to the unique positive solution.

The linear-concave solve is performed on a normalized copy of the problem
(concave coefficient rescaled to lambda1 - lam, using the exact homogeneity
u -> s*u of the equation), whose solution has sup norm c(q, lam) = O(1).
This keeps every tolerance meaningful arbitrarily close to q = p, where the
physical solution scale (lambda1 - lam)^{-1/(p-q)} under- or overflows any
fixed threshold.

The normalized sup norm c(q, lam) = ||u_{q,lam}||_inf * (lambda1-lam)^{1/(p-q)}
satisfies c >= 1, with c^{p-q} -> 1 as q -> p; verify_supnorm_sandwich checks
the two-sided bound

  (lambda1-lam)^{-1/(p-q)} <= ||u_{q,lam}||_inf
                           <= (||u_{q,0}||_inf^{q-p} - lam)^{-1/(p-q)}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    CONVERGED,
    MAX_ITERS,
    P_MAX,
    P_MIN,
    SolveReport,
    SolverConfig,
    solve_p_poisson,
    weak_residual,
)
from .eigen import EigenResult, positive_bubble
from .grid import Grid, GridFunction, sup_norm

__all__ = [
    "Params",
    "ConcaveSolution",
    "LinearConcaveSolution",
    "SandwichReport",
    "solve_concave",
    "solve_linear_concave",
    "verify_supnorm_sandwich",
    "c_constant",
    "LAMBDA_CAP_FRACTION",
]

LAMBDA_CAP_FRACTION = 1.0 - 1e-3
_MAX_PICARD = 5000


@dataclass(frozen=True)
class Params:
    """Exponents of the concave-convex problem, 1 < q < p < r."""

    p: float
    q: float
    r: float

    def __post_init__(self) -> None:
        if not (1.0 < self.q < self.p < self.r):
            raise ValueError(
                f"invalid-exponents: require 1 < q < p < r, got q={self.q}, p={self.p}, r={self.r}"
            )
        if self.p - self.q < 1e-6:
            raise ValueError(
                f"exponent-degeneracy: p - q must be at least 1e-6, got {self.p - self.q}"
            )
        if not (P_MIN <= self.p <= P_MAX):
            raise ValueError(f"p-out-of-range: p must lie in [{P_MIN}, {P_MAX}], got {self.p}")


@dataclass(frozen=True)
class ConcaveSolution:
    u: GridFunction
    Lambda: float
    sup_norm: float
    report: SolveReport


@dataclass(frozen=True)
class LinearConcaveSolution:
    u: GridFunction
    lam: float
    coeff: float
    sup_norm: float
    c_value: float
    report: SolveReport


@dataclass(frozen=True)
class SandwichReport:
    lower: float
    supnorm: float
    upper: float
    holds: bool
    upper_defined: bool


def _positive_part(values: np.ndarray) -> np.ndarray:
    return np.clip(values, 0.0, None)


def _dirichlet_term(u: GridFunction, p: float) -> float:
    s = u.slopes()
    return float(u.grid.h * np.sum(np.abs(s) ** p))


def _trapz_power(u: GridFunction, expo: float) -> float:
    v = _positive_part(u.values) ** expo
    return float(u.grid.h * (0.5 * v[0] + v[1:-1].sum() + 0.5 * v[-1]))


def _picard_minimize(
    grid: Grid,
    p: float,
    cfg: SolverConfig,
    start: GridFunction,
    freeze_rhs: Callable[[GridFunction], GridFunction],
    full_energy: Callable[[GridFunction], float],
    max_outer: int,
    rescale_exponent: float | None = None,
) -> tuple[GridFunction, SolveReport]:
    """Majorize-minimize sweep u_{k+1} = solve(freeze_rhs(u_k)).

    When ``rescale_exponent`` is given, each iterate may be rescaled along its
    ray by (sup growth factor)^rescale_exponent; for the homogeneous concave
    problem this removes the scale error in one step.  The rescaled candidate
    is kept only when it lowers the full energy, so descent is preserved.
    """
    u = start
    rhs = freeze_rhs(u)
    iters = 0
    res = math.inf
    status = MAX_ITERS
    for iters in range(1, max_outer + 1):
        v, rep = solve_p_poisson(rhs, p, cfg, init=u)
        if rep.status != CONVERGED:
            status = rep.status
            u = v
            break
        if rescale_exponent is not None:
            old_sup, new_sup = sup_norm(u), sup_norm(v)
            if old_sup > 0 and new_sup > 0:
                mu = new_sup / old_sup
                candidate = GridFunction(grid, mu**rescale_exponent * v.values)
                if full_energy(candidate) < full_energy(v):
                    v = candidate
        step = float(np.max(np.abs(v.values - u.values)))
        u = v
        rhs = freeze_rhs(u)
        if step <= cfg.tol_step:  # residual is the (costlier) secondary test
            res = sup_norm(weak_residual(u, p, rhs))
            if res <= cfg.tol_residual * (1.0 + sup_norm(rhs)):
                status = CONVERGED
                break
    if not math.isfinite(res):
        res = sup_norm(weak_residual(u, p, freeze_rhs(u)))
    report = SolveReport(
        iterations=iters,
        final_residual=res,
        final_energy=full_energy(u),
        sup_norm=sup_norm(u),
        status=status,
    )
    return u, report


def solve_concave(
    Lambda: float,
    params: Params,
    grid: Grid,
    cfg: SolverConfig = SolverConfig(),
    max_outer: int = _MAX_PICARD,
    start: GridFunction | None = None,
) -> ConcaveSolution:
    """Positive solution of the pure-concave problem at coefficient Lambda.

    Minimizes (1/p) int |w'|^p - (Lambda/q) int (w+)^q, coercive since q < p.
    Lambda = 0 returns the zero function.  Solutions scale exactly as
    Lambda^{1/(p-q)}.
    """
    if Lambda < 0:
        raise ValueError(f"invalid-coefficient: Lambda must be >= 0, got {Lambda}")
    p, q = params.p, params.q
    if Lambda == 0.0:
        zero = GridFunction.zeros(grid)
        report = SolveReport(0, 0.0, 0.0, 0.0, CONVERGED)
        return ConcaveSolution(u=zero, Lambda=0.0, sup_norm=0.0, report=report)

    def freeze(w: GridFunction) -> GridFunction:
        return GridFunction(grid, Lambda * _positive_part(w.values) ** (q - 1.0))

    def full_energy(w: GridFunction) -> float:
        return _dirichlet_term(w, p) / p - (Lambda / q) * _trapz_power(w, q)

    if start is None:
        bubble = positive_bubble(grid)
        start = GridFunction(grid, bubble.values / sup_norm(bubble))
    u, report = _picard_minimize(
        grid,
        p,
        cfg,
        start,
        freeze,
        full_energy,
        max_outer,
        rescale_exponent=(q - 1.0) / (p - q),
    )
    if report.status != CONVERGED:
        raise RuntimeError(
            f"max-iters: concave solve at Lambda={Lambda} stopped with {report.status}"
        )
    return ConcaveSolution(u=u, Lambda=Lambda, sup_norm=sup_norm(u), report=report)


def solve_linear_concave(
    lam: float,
    coeff: float,
    params: Params,
    grid: Grid,
    eig: EigenResult,
    cfg: SolverConfig = SolverConfig(),
    max_outer: int = _MAX_PICARD,
    start: GridFunction | None = None,
) -> LinearConcaveSolution:
    """Positive solution of -(|u'|^{p-2}u')' = lam u^{p-1} + coeff u^{q-1}.

    Requires 0 <= lam <= (1 - 1e-3) * lambda1: no positive solution exists for
    lam >= lambda1, and just below it the solution norm blows up like
    (lambda1 - lam)^{-1/(p-q)} and the discretization degenerates.

    ``start``, when given, seeds the normalized iteration (scale O(1)).
    """
    p, q = params.p, params.q
    lam1 = eig.lambda1
    if lam < 0:
        raise ValueError(f"invalid-coefficient: lam must be >= 0, got {lam}")
    cap = LAMBDA_CAP_FRACTION * lam1
    if lam > cap:
        raise ValueError(
            f"lambda-too-large: lam={lam} exceeds the cap {cap} "
            f"(= {LAMBDA_CAP_FRACTION} * lambda1); the problem admits no positive "
            f"solution for lam >= lambda1 = {lam1}"
        )
    if coeff <= 0:
        raise ValueError(f"invalid-coefficient: coeff must be > 0, got {coeff}")

    coeff_norm = lam1 - lam
    scale = (coeff / coeff_norm) ** (1.0 / (p - q))
    if not (np.isfinite(scale) and scale > 0):
        raise ValueError(
            f"scale-overflow: solution scale (coeff/(lambda1-lam))^(1/(p-q)) "
            f"is not representable for coeff={coeff}, lam={lam}, p-q={p - q}"
        )

    def freeze(v: GridFunction) -> GridFunction:
        pos = _positive_part(v.values)
        return GridFunction(grid, lam * pos ** (p - 1.0) + coeff_norm * pos ** (q - 1.0))

    def full_energy(v: GridFunction) -> float:
        return (
            _dirichlet_term(v, p) / p
            - (lam / p) * _trapz_power(v, p)
            - (coeff_norm / q) * _trapz_power(v, q)
        )

    if start is None:
        bubble = positive_bubble(grid)
        start = GridFunction(grid, bubble.values / sup_norm(bubble))
    v, report = _picard_minimize(
        grid,
        p,
        cfg,
        start,
        freeze,
        full_energy,
        max_outer,
        rescale_exponent=(q - 1.0) / (p - q) if lam == 0.0 else None,
    )
    if report.status != CONVERGED:
        raise RuntimeError(
            f"max-iters: linear-concave solve at lam={lam}, coeff={coeff} "
            f"stopped with {report.status}"
        )
    if np.any(v.interior() <= 0.0):
        raise RuntimeError("not-positive: linear-concave solution left the positive cone")

    c_value = sup_norm(v)  # = sup(u) * ((lam1-lam)/coeff)^{1/(p-q)}, evaluated stably
    u = GridFunction(grid, scale * v.values)
    report = SolveReport(
        iterations=report.iterations,
        final_residual=report.final_residual,  # residual of the normalized problem
        final_energy=report.final_energy,
        sup_norm=sup_norm(u),
        status=report.status,
    )
    return LinearConcaveSolution(
        u=u,
        lam=lam,
        coeff=coeff,
        sup_norm=sup_norm(u),
        c_value=c_value,
        report=report,
    )


def verify_supnorm_sandwich(
    lam: float,
    params: Params,
    grid: Grid,
    eig: EigenResult,
    cfg: SolverConfig = SolverConfig(),
    slack: float = 5e-2,
) -> SandwichReport:
    """Check the two-sided sup-norm bound for the linear-concave solution.

    The upper bound is undefined when ||u_{q,0}||^{q-p} <= lam; that case is
    reported (upper = nan, upper_defined = False) and only the lower bound
    enters ``holds``.
    """
    p, q = params.p, params.q
    sol0 = solve_linear_concave(0.0, 1.0, params, grid, eig, cfg)
    sol = sol0 if lam == 0.0 else solve_linear_concave(lam, 1.0, params, grid, eig, cfg)
    M = sol.sup_norm
    lower = (eig.lambda1 - lam) ** (-1.0 / (p - q))
    base = sol0.sup_norm ** (q - p) - lam
    lower_ok = lower <= M * (1.0 + slack)
    if base <= 0.0:
        return SandwichReport(
            lower=lower, supnorm=M, upper=math.nan, holds=lower_ok, upper_defined=False
        )
    upper = base ** (-1.0 / (p - q))
    return SandwichReport(
        lower=lower,
        supnorm=M,
        upper=upper,
        holds=lower_ok and M <= upper * (1.0 + slack),
        upper_defined=True,
    )


def c_constant(
    lam: float,
    params: Params,
    grid: Grid,
    eig: EigenResult,
    cfg: SolverConfig = SolverConfig(),
) -> float:
    """Normalized sup norm ||u_{q,lam}||_inf * (lambda1 - lam)^{1/(p-q)}.

    Satisfies c >= 1 (up to discretization) and c^{p-q} -> 1 as q -> p.
    """
    return solve_linear_concave(lam, 1.0, params, grid, eig, cfg).c_value
