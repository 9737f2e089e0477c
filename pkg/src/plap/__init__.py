"""Concave-convex p-Laplacian boundary value problems on an interval.

Solvers for -(|u'|^{p-2}u')' = Lambda u^{q-1} + u^{r-1} with zero boundary
values and 1 < q < p < r: the first eigenvalue of the p-Laplacian, the
auxiliary concave and linear-concave problems, monotone sub/supersolution
iteration, closed-form existence-threshold bounds, and empirical threshold
bracketing.
"""

from .core import (
    CONVERGED,
    DIVERGED,
    MAX_ITERS,
    SolveReport,
    SolverConfig,
    energy,
    solve_p_poisson,
    weak_residual,
)
from .eigen import (
    EigenResult,
    SupersolutionCertificate,
    check_supersolution,
    first_eigenpair,
    rayleigh_quotient,
)
from .grid import (
    Grid,
    GridFunction,
    lp_norm,
    make_grid,
    read_csv,
    sup_norm,
    w1p_seminorm,
    write_csv,
)
from .model_problems import (
    ConcaveSolution,
    LinearConcaveSolution,
    Params,
    SandwichReport,
    c_constant,
    solve_concave,
    solve_linear_concave,
    verify_supnorm_sandwich,
)
from .monotone import (
    INCONCLUSIVE,
    IterationOutcome,
    IterationState,
    build_subsolution,
    build_supersolution,
    iterate,
    run_iteration,
)
from .threshold import (
    SweepResult,
    ThresholdBracket,
    empirical_threshold,
    lambda_hat,
    lambda_tilde,
    nonexistence_certificate,
    phi,
    phi_argmin,
    supersolution_fraction,
    sweep_q,
    write_sweep_csv,
)

__version__ = "0.1.0"
