"""Monotone sub/supersolution iteration for the concave-convex problem

    -(|u'|^{p-2}u')' = Lambda * u^{q-1} + u^{r-1},   u = 0 at the endpoints,

with 1 < q < p < r.  Starting from the positive subsolution (the solution of
the pure-concave problem), each sweep freezes the right-hand side at the
previous iterate and performs one frozen-RHS solve:

    -(|w_k'|^{p-2}w_k')' = Lambda * w_{k-1}^{q-1} + w_{k-1}^{r-1}.

The right-hand side is monotone in w >= 0 and the discrete operator is
inverse monotone, so the iterates increase nodally and, when a supersolution
is supplied, stay trapped below it; the limit is the minimal solution above
the subsolution.  Unbounded growth of the sup norm past ``blowup_cap`` is the
numerical signature of nonexistence and classifies the run as diverged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import CONVERGED, DIVERGED, SolverConfig, solve_p_poisson, weak_residual
from .eigen import EigenResult
from .grid import Grid, GridFunction, sup_norm
from .model_problems import Params, solve_concave, solve_linear_concave

__all__ = [
    "INCONCLUSIVE",
    "IterationState",
    "IterationOutcome",
    "supersolution_fraction",
    "build_subsolution",
    "build_supersolution",
    "concave_convex_rhs",
    "iterate",
    "run_iteration",
]

INCONCLUSIVE = "inconclusive"
DEFAULT_MAX_OUTER = 2000


@dataclass
class IterationState:
    """Evolving record of one monotone run.

    ``min_increment`` is the most negative nodal step w_k - w_{k-1} observed
    (monotonicity means it stays above -tol_step); ``max_above_super`` is the
    largest nodal excess over the supersolution (trapping keeps it below
    tol_step).
    """

    Lambda: float
    subsolution: GridFunction
    supersolution: GridFunction | None
    iterates_supnorm: list[float] = field(default_factory=list)
    current: GridFunction | None = None
    k: int = 0
    min_increment: float = math.inf
    max_above_super: float = -math.inf


@dataclass(frozen=True)
class IterationOutcome:
    status: str
    solution: GridFunction | None
    k_final: int
    residual: float


def supersolution_fraction(p: float, q: float, r: float) -> float:
    """Fraction of lambda1 used for the supersolution construction.

    (p - q)/(r - q) maximizes t^{(p-q)/(r-p)} (1 - t) over (0, 1), which is
    exactly the quantity the supersolution condition can afford; any other
    fraction certifies existence on a smaller coefficient range.
    """
    if not (1.0 < q < p < r):
        raise ValueError(
            f"invalid-exponents: require 1 < q < p < r, got q={q}, p={p}, r={r}"
        )
    return (p - q) / (r - q)


def concave_convex_rhs(w: GridFunction, Lambda: float, params: Params) -> GridFunction:
    """Frozen right-hand side Lambda * (w+)^{q-1} + (w+)^{r-1}."""
    pos = np.clip(w.values, 0.0, None)
    return GridFunction(w.grid, Lambda * pos ** (params.q - 1.0) + pos ** (params.r - 1.0))


def build_subsolution(
    Lambda: float,
    params: Params,
    grid: Grid,
    cfg: SolverConfig = SolverConfig(),
) -> GridFunction:
    """Positive solution of the pure-concave problem; a subsolution of the
    full equation since the omitted convex term is nonnegative."""
    if Lambda <= 0:
        raise ValueError(f"invalid-coefficient: Lambda must be > 0, got {Lambda}")
    return solve_concave(Lambda, params, grid, cfg).u


def build_supersolution(
    Lambda: float,
    params: Params,
    grid: Grid,
    eig: EigenResult,
    cfg: SolverConfig = SolverConfig(),
    lambda_choice: float | None = None,
) -> GridFunction | None:
    """Supersolution candidate from the linear-concave problem, or None.

    Solves -(|u'|^{p-2}u')' = lam u^{p-1} + Lambda u^{q-1} at
    lam = lambda_choice (default: supersolution_fraction * lambda1) and
    returns the solution iff lam >= sup_norm^{r-p}, the exact condition for
    the linear term to dominate the convex term below the sup norm.
    """
    if Lambda <= 0:
        raise ValueError(f"invalid-coefficient: Lambda must be > 0, got {Lambda}")
    p, q, r = params.p, params.q, params.r
    if lambda_choice is None:
        lambda_choice = supersolution_fraction(p, q, r) * eig.lambda1
    if not (0.0 < lambda_choice < eig.lambda1):
        raise ValueError(
            f"invalid-lambda-choice: need 0 < lambda_choice < lambda1, got {lambda_choice}"
        )
    sol = solve_linear_concave(lambda_choice, Lambda, params, grid, eig, cfg)
    if lambda_choice >= sol.sup_norm ** (r - p):
        return sol.u
    return None


def run_iteration(
    Lambda: float,
    params: Params,
    sub: GridFunction,
    super_: GridFunction | None = None,
    cfg: SolverConfig = SolverConfig(),
    max_outer: int = DEFAULT_MAX_OUTER,
    trace: list | None = None,
) -> tuple[IterationOutcome, IterationState]:
    """Run the monotone sweep; returns (outcome, state).

    Stops converged when the step sup norm drops below tol_step and the weak
    residual of the full equation is below tolerance; diverged when the sup
    norm passes blowup_cap (an inner-solve blowup counts as well);
    inconclusive when max_outer runs out or an inner solve fails.  When
    ``trace`` is a list, one (k, sup_norm, residual) tuple is appended per
    sweep.
    """
    if Lambda <= 0:
        raise ValueError(f"invalid-coefficient: Lambda must be > 0, got {Lambda}")
    if np.any(sub.interior() <= 0.0):
        raise ValueError("not-positive: subsolution must be positive at interior nodes")
    p = params.p
    grid = sub.grid
    state = IterationState(
        Lambda=Lambda,
        subsolution=sub,
        supersolution=super_,
        iterates_supnorm=[sup_norm(sub)],
        current=sub,
        k=0,
    )

    w = sub
    rhs = concave_convex_rhs(w, Lambda, params)
    prev_rhs_sup = sup_norm(rhs)
    status = INCONCLUSIVE
    solution = None
    residual = math.inf
    for k in range(1, max_outer + 1):
        state.k = k
        # warm start; during strong growth, pre-scale it by the homogeneity
        # of the solve (never near the fixed point, where an unperturbed
        # warm start lets the solver report exact stationarity)
        rhs_sup = sup_norm(rhs)
        init = w
        if prev_rhs_sup > 0.0 and rhs_sup > 0.0:
            ratio = rhs_sup / prev_rhs_sup
            if not 0.9 < ratio < 1.1:
                init = GridFunction(grid, ratio ** (1.0 / (p - 1.0)) * w.values)
        prev_rhs_sup = rhs_sup
        w_new, rep = solve_p_poisson(rhs, p, cfg, init=init)
        if rep.status == DIVERGED:
            status = DIVERGED
            state.current = w_new
            state.iterates_supnorm.append(rep.sup_norm)
            residual = rep.final_residual
            break
        if rep.status != CONVERGED:
            status = INCONCLUSIVE
            residual = rep.final_residual
            break

        increment = w_new.values - w.values
        state.min_increment = min(state.min_increment, float(np.min(increment)))
        if super_ is not None:
            state.max_above_super = max(
                state.max_above_super, float(np.max(w_new.values - super_.values))
            )
        state.current = w_new
        state.iterates_supnorm.append(sup_norm(w_new))

        rhs = concave_convex_rhs(w_new, Lambda, params)
        step = float(np.max(np.abs(increment)))
        w = w_new
        if sup_norm(w_new) > cfg.blowup_cap:
            status = DIVERGED
            break
        # the residual is the costlier secondary test; evaluate it only once
        # the step criterion fires (or a trace is requested)
        if trace is not None or step <= cfg.tol_step:
            residual = sup_norm(weak_residual(w_new, p, rhs))
            if trace is not None:
                trace.append((k, sup_norm(w_new), residual))
            if step <= cfg.tol_step and residual <= cfg.tol_residual * (1.0 + sup_norm(rhs)):
                status = CONVERGED
                solution = w_new
                break

    if not math.isfinite(residual) and state.current is not None:
        residual = sup_norm(
            weak_residual(state.current, p, concave_convex_rhs(state.current, Lambda, params))
        )
    outcome = IterationOutcome(status=status, solution=solution, k_final=state.k, residual=residual)
    return outcome, state


def iterate(
    Lambda: float,
    params: Params,
    sub: GridFunction,
    super_: GridFunction | None = None,
    cfg: SolverConfig = SolverConfig(),
    max_outer: int = DEFAULT_MAX_OUTER,
    trace: list | None = None,
) -> IterationOutcome:
    """Monotone iteration from the subsolution; see :func:`run_iteration`."""
    outcome, _ = run_iteration(Lambda, params, sub, super_, cfg, max_outer, trace)
    return outcome
