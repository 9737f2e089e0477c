"""Existence-threshold bounds and empirical bracketing for the
concave-convex problem.

For exponents 1 < q < p < r the problem

    -(|u'|^{p-2}u')' = Lambda * u^{q-1} + u^{r-1}

has a finite existence threshold in Lambda.  Two closed forms bracket it:

  * ``lambda_hat``  — above it no positive solution exists.  The proof device
    is the profile phi(t) = Lambda t^{q-p} + t^{r-p}: once its minimum exceeds
    the first eigenvalue, any solution would certify an eigenvalue level
    above lambda1, which is impossible.
  * ``lambda_tilde`` — up to it a solution exists, built from an explicit
    sub/supersolution pair; it equals lambda_hat * c^{q-p} with c the
    normalized sup norm of the linear-concave solution at
    lam = supersolution_fraction * lambda1.

``empirical_threshold`` brackets the actual threshold by bisection, classifying
each Lambda through the monotone iteration (converged below, diverged above).
``sweep_q`` repeats that over a ladder of q values; as q increases toward p
both bounds, and the empirical threshold with them, close in on lambda1.

Classification caveat: between the two bounds no supersolution is available
and the iteration runs unguarded from the subsolution; this classifies
existence correctly provided the subsolution sits below every positive
solution, which holds whenever the concave-problem comparison principle
applies.  Inconclusive runs (budget exhausted) are retried once with a
doubled budget, then counted and left as bracket-width inflation.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import CONVERGED, DIVERGED, SolverConfig
from .eigen import EigenResult, first_eigenpair
from .grid import Grid, GridFunction, make_grid
from .model_problems import Params, c_constant
from .monotone import (
    DEFAULT_MAX_OUTER,
    build_subsolution,
    build_supersolution,
    iterate,
    supersolution_fraction,
)

__all__ = [
    "ThresholdBracket",
    "SweepResult",
    "lambda_hat",
    "lambda_tilde",
    "phi",
    "phi_argmin",
    "nonexistence_certificate",
    "supersolution_fraction",
    "empirical_threshold",
    "sweep_q",
    "SWEEP_CSV_HEADER",
    "write_sweep_csv",
]

SWEEP_CSV_HEADER = (
    "p,q,r,lambda1,lambda_tilde,lambda_emp,lambda_hat,bracket_lo,bracket_hi,n_inconclusive"
)


def _check_exponents(p: float, q: float, r: float) -> None:
    if not (1.0 < q < p < r):
        raise ValueError(
            f"invalid-exponents: require 1 < q < p < r, got q={q}, p={p}, r={r}"
        )
    if r - p < 1e-6:
        raise ValueError(f"exponent-degeneracy: r - p must be at least 1e-6, got {r - p}")


def lambda_hat(p: float, q: float, r: float, lambda1: float) -> float:
    """Closed-form upper bound for the existence threshold.

    lambda1^{(r-q)/(r-p)} * (r-p) * ((p-q)^{p-q} / (r-q)^{r-q})^{1/(r-p)};
    tends to lambda1 as q -> p.
    """
    _check_exponents(p, q, r)
    if lambda1 <= 0:
        raise ValueError(f"invalid-eigenvalue: lambda1 must be positive, got {lambda1}")
    return (
        lambda1 ** ((r - q) / (r - p))
        * (r - p)
        * ((p - q) ** (p - q) / (r - q) ** (r - q)) ** (1.0 / (r - p))
    )


def lambda_tilde(p: float, q: float, r: float, lambda1: float, c_at_tq: float) -> float:
    """Closed-form lower bound: lambda_hat * c^{q-p}, c >= 1 the normalized
    sup norm of the linear-concave solution at the supersolution fraction."""
    if c_at_tq < 1.0 - 1e-3:
        raise ValueError(f"invalid-c: c must be >= 1 - 1e-3, got {c_at_tq}")
    return lambda_hat(p, q, r, lambda1) * c_at_tq ** (q - p)


def phi(t, Lambda: float, p: float, q: float, r: float):
    """Homogeneity-balance profile Lambda t^{q-p} + t^{r-p}; accepts arrays."""
    _check_exponents(p, q, r)
    if Lambda <= 0:
        raise ValueError(f"nonpositive-Lambda: Lambda must be > 0, got {Lambda}")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise ValueError("nonpositive-t: phi is defined for t > 0 only")
    out = Lambda * t_arr ** (q - p) + t_arr ** (r - p)
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def phi_argmin(Lambda: float, p: float, q: float, r: float) -> tuple[float, float]:
    """Closed-form minimizer and minimum of the profile.

    t_min = (Lambda (p-q)/(r-p))^{1/(r-q)};
    phi_min = Lambda^{(r-p)/(r-q)} (r-q) / ((p-q)^{(p-q)/(r-q)} (r-p)^{(r-p)/(r-q)}).
    """
    _check_exponents(p, q, r)
    if Lambda <= 0:
        raise ValueError(f"nonpositive-Lambda: Lambda must be > 0, got {Lambda}")
    t_min = (Lambda * (p - q) / (r - p)) ** (1.0 / (r - q))
    phi_min = (
        Lambda ** ((r - p) / (r - q))
        * (r - q)
        / ((p - q) ** ((p - q) / (r - q)) * (r - p) ** ((r - p) / (r - q)))
    )
    return t_min, phi_min


def nonexistence_certificate(Lambda: float, p: float, q: float, r: float, lambda1: float) -> bool:
    """True iff the profile minimum strictly exceeds lambda1, i.e. iff
    Lambda > lambda_hat; the boundary itself does not certify."""
    _, phi_min = phi_argmin(Lambda, p, q, r)
    return bool(phi_min > lambda1 * (1.0 + 1e-12))


@dataclass(frozen=True)
class ThresholdBracket:
    """One bracketing run: closed-form bounds plus the bisection result."""

    p: float
    q: float
    r: float
    lambda1: float
    lambda_tilde: float
    lambda_hat: float
    lambda_emp: float | None
    bracket_lo: float
    bracket_hi: float
    n_inconclusive: int

    @property
    def bound_gap(self) -> float:
        return self.lambda_hat - self.lambda_tilde

    @property
    def eigen_gap(self) -> float:
        """|lambda_emp - lambda1|, the quantity that shrinks as q -> p."""
        if self.lambda_emp is None:
            return math.nan
        return abs(self.lambda_emp - self.lambda1)


def empirical_threshold(
    params: Params,
    grid: Grid,
    eig: EigenResult,
    cfg: SolverConfig = SolverConfig(),
    max_outer: int = DEFAULT_MAX_OUTER,
    rel_width: float = 1e-3,
    max_steps: int = 40,
) -> ThresholdBracket:
    """Bracket the existence threshold by bisection between the closed forms.

    Each candidate Lambda is classified by the monotone iteration: converged
    moves the lower endpoint, diverged the upper one.  A candidate that stays
    inconclusive after one retry at doubled budget is recorded and skipped;
    further candidates bisect the largest remaining gap, so unresolved points
    inflate the final bracket instead of being silently resolved.
    """
    p, q, r = params.p, params.q, params.r
    lam1 = eig.lambda1
    c = c_constant(supersolution_fraction(p, q, r) * lam1, params, grid, eig, cfg)
    hat = lambda_hat(p, q, r, lam1)
    tilde = lambda_tilde(p, q, r, lam1, c)

    n_inconclusive = 0

    def classify(L: float) -> str:
        nonlocal n_inconclusive
        sub = build_subsolution(L, params, grid, cfg)
        super_ = build_supersolution(L, params, grid, eig, cfg)
        out = iterate(L, params, sub, super_, cfg, max_outer=max_outer)
        if out.status not in (CONVERGED, DIVERGED):
            out = iterate(L, params, sub, super_, cfg, max_outer=2 * max_outer)
        if out.status not in (CONVERGED, DIVERGED):
            n_inconclusive += 1
        return out.status

    lo, hi = tilde, 1.01 * hat
    status_lo = classify(lo)
    if status_lo == DIVERGED:
        raise RuntimeError(
            "bracket-inverted: iteration diverged at the lower existence bound; "
            "solver tolerances are inconsistent with the closed forms"
        )
    status_hi = classify(hi)
    if status_hi == CONVERGED:
        raise RuntimeError(
            "bracket-inverted: iteration converged above the nonexistence bound; "
            "solver tolerances are inconsistent with the closed forms"
        )
    # an endpoint left inconclusive is counted (above) and kept as an anchor

    unresolved: list[float] = []
    steps = 2
    while steps < max_steps:
        if hi - lo <= rel_width * 0.5 * (lo + hi):
            break
        marks = [lo, *sorted(x for x in unresolved if lo < x < hi), hi]
        gaps = [b - a for a, b in zip(marks, marks[1:])]
        widest = int(np.argmax(gaps))
        candidate = 0.5 * (marks[widest] + marks[widest + 1])
        outcome = classify(candidate)
        steps += 1
        if outcome == CONVERGED:
            lo = candidate
        elif outcome == DIVERGED:
            hi = candidate
        else:
            unresolved.append(candidate)
        unresolved = [x for x in unresolved if lo < x < hi]

    return ThresholdBracket(
        p=p,
        q=q,
        r=r,
        lambda1=lam1,
        lambda_tilde=tilde,
        lambda_hat=hat,
        lambda_emp=0.5 * (lo + hi),
        bracket_lo=lo,
        bracket_hi=hi,
        n_inconclusive=n_inconclusive,
    )


@dataclass(frozen=True)
class SweepResult:
    rows: list[ThresholdBracket]
    row_errors: list[tuple[float, str]]


def _sweep_row(args: tuple) -> ThresholdBracket:
    (p, r, q, a, b, n_cells, cfg, eig, max_outer, rel_width, max_steps) = args
    params = Params(p=p, q=q, r=r)
    grid = make_grid(a, b, n_cells)
    return empirical_threshold(
        params, grid, eig, cfg, max_outer=max_outer, rel_width=rel_width, max_steps=max_steps
    )


def sweep_q(
    p: float,
    r: float,
    q_list: list[float],
    grid: Grid,
    eig: EigenResult | None = None,
    cfg: SolverConfig = SolverConfig(),
    jobs: int = 1,
    max_outer: int = DEFAULT_MAX_OUTER,
    rel_width: float = 1e-3,
    max_steps: int = 40,
) -> SweepResult:
    """One ThresholdBracket per q, rows independent (optionally concurrent).

    The eigenpair is computed once up front and shared.  Per-row failures are
    recorded in row_errors and do not stop the sweep.  Rows are returned in
    q order regardless of completion order, so output is deterministic.
    """
    if not q_list:
        raise ValueError("empty-q-list: need at least one q value")
    if any(b <= a for a, b in zip(q_list, q_list[1:])):
        raise ValueError("unsorted-q-list: q values must be strictly increasing")
    if eig is None:
        eig = first_eigenpair(p, grid, cfg)

    tasks = [
        (p, r, q, grid.a, grid.b, grid.n_cells, cfg, eig, max_outer, rel_width, max_steps)
        for q in q_list
    ]
    rows: dict[float, ThresholdBracket] = {}
    errors: list[tuple[float, str]] = []
    if jobs <= 1:
        for q, task in zip(q_list, tasks):
            try:
                rows[q] = _sweep_row(task)
            except Exception as exc:  # noqa: BLE001 - per-row isolation
                errors.append((q, str(exc)))
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_sweep_row, task): q for q, task in zip(q_list, tasks)}
            for fut in concurrent.futures.as_completed(futures):
                q = futures[fut]
                try:
                    rows[q] = fut.result()
                except Exception as exc:  # noqa: BLE001
                    errors.append((q, str(exc)))
    ordered = [rows[q] for q in q_list if q in rows]
    errors.sort(key=lambda e: e[0])
    return SweepResult(rows=ordered, row_errors=errors)


def _fmt(x: float | None) -> str:
    if x is None:
        return ""
    return f"{x:.17g}"


def write_sweep_csv(rows: list[ThresholdBracket], path) -> None:
    """Fixed-order CSV, one header line then one row per bracket."""
    lines = [SWEEP_CSV_HEADER]
    for b in rows:
        lines.append(
            ",".join(
                [
                    _fmt(b.p),
                    _fmt(b.q),
                    _fmt(b.r),
                    _fmt(b.lambda1),
                    _fmt(b.lambda_tilde),
                    _fmt(b.lambda_emp),
                    _fmt(b.lambda_hat),
                    _fmt(b.bracket_lo),
                    _fmt(b.bracket_hi),
                    str(b.n_inconclusive),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")
