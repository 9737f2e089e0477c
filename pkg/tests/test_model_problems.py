import math

import numpy as np
import pytest

from plap.core import CONVERGED, SolverConfig
from plap.eigen import first_eigenpair
from plap.grid import GridFunction, make_grid, sup_norm
from plap.model_problems import (
    Params,
    c_constant,
    solve_concave,
    solve_linear_concave,
    verify_supnorm_sandwich,
)

from oracles import shoot_concave_sup

P215 = Params(p=2.0, q=1.5, r=3.0)


@pytest.fixture(scope="module")
def grid():
    return make_grid(0, 1, 256)


@pytest.fixture(scope="module")
def eig(grid):
    return first_eigenpair(2.0, grid)


class TestParams:
    def test_valid(self):
        p = Params(p=2.5, q=1.2, r=4.0)
        assert p.p == 2.5

    @pytest.mark.parametrize(
        "p,q,r",
        [(2.0, 2.0, 3.0), (2.0, 2.5, 3.0), (2.0, 1.5, 2.0), (2.0, 0.9, 3.0), (2.0, 1.5, 1.8)],
    )
    def test_ordering_enforced(self, p, q, r):
        with pytest.raises(ValueError, match="invalid-exponents"):
            Params(p=p, q=q, r=r)

    def test_degenerate_gap(self):
        with pytest.raises(ValueError, match="exponent-degeneracy"):
            Params(p=2.0, q=2.0 - 1e-9, r=3.0)

    def test_p_range(self):
        with pytest.raises(ValueError, match="p-out-of-range"):
            Params(p=11.0, q=1.5, r=12.0)


class TestSolveConcave:
    def test_zero_coefficient_gives_zero(self, grid):
        sol = solve_concave(0.0, P215, grid)
        assert sol.sup_norm == 0.0
        assert sol.report.status == CONVERGED

    def test_negative_coefficient_rejected(self, grid):
        with pytest.raises(ValueError, match="invalid-coefficient"):
            solve_concave(-1.0, P215, grid)

    def test_scaling_law(self, grid):
        # u_Lambda = Lambda^{1/(p-q)} * u_1, exactly at the continuum level
        base = solve_concave(1.0, P215, grid)
        expo = 1.0 / (P215.p - P215.q)
        for Lam in (0.25, 4.0):
            sol = solve_concave(Lam, P215, grid)
            ref = Lam**expo * base.u.values
            rel = np.max(np.abs(sol.u.values - ref)) / np.max(np.abs(ref))
            assert rel < 1e-6

    def test_matches_shooting_oracle(self):
        # independent two-point BVP shooting at p = 2, q = 1.5, Lambda = 1
        grid = make_grid(0, 1, 512)
        sol = solve_concave(1.0, P215, grid)
        oracle = shoot_concave_sup(1.0, 1.5)
        assert oracle == pytest.approx(0.012566, abs=2e-5)  # frozen pre-build value
        assert sol.sup_norm == pytest.approx(oracle, abs=1e-4)

    def test_positive_interior_and_converged(self, grid):
        sol = solve_concave(2.0, P215, grid)
        assert sol.report.status == CONVERGED
        assert np.all(sol.u.interior() > 0)

    @pytest.mark.parametrize("p,q", [(1.5, 1.2), (3.0, 2.0)])
    def test_other_exponents_converge(self, grid, p, q):
        params = Params(p=p, q=q, r=p + 1)
        sol = solve_concave(1.0, params, grid)
        assert sol.report.status == CONVERGED
        assert sol.sup_norm > 0


class TestSolveLinearConcave:
    def test_lambda_zero_coincides_with_concave(self, grid, eig):
        lc = solve_linear_concave(0.0, 1.0, P215, grid, eig)
        cc = solve_concave(1.0, P215, grid)
        assert np.max(np.abs(lc.u.values - cc.u.values)) <= 1e-6 * cc.sup_norm

    def test_lambda_at_lambda1_rejected(self, grid, eig):
        with pytest.raises(ValueError, match="lambda-too-large"):
            solve_linear_concave(eig.lambda1, 1.0, P215, grid, eig)

    def test_lambda_just_above_cap_rejected(self, grid, eig):
        with pytest.raises(ValueError, match="lambda-too-large"):
            solve_linear_concave(0.9995 * eig.lambda1, 1.0, P215, grid, eig)

    def test_large_lambda_blows_up_like_lower_bound(self, grid, eig):
        lam = 0.99 * eig.lambda1
        sol = solve_linear_concave(lam, 1.0, P215, grid, eig)
        lower = (eig.lambda1 - lam) ** (-1.0 / (P215.p - P215.q))
        assert sol.sup_norm >= lower * (1 - 1e-6)
        assert sol.sup_norm > 50.0

    def test_initialization_independence(self, grid, eig):
        lam = 0.5 * eig.lambda1
        a = solve_linear_concave(lam, 1.0, P215, grid, eig)
        other = GridFunction.from_callable(
            grid, lambda x: 3.0 * np.sin(np.pi * x) ** 2
        )
        b = solve_linear_concave(lam, 1.0, P215, grid, eig, start=other)
        assert np.max(np.abs(a.u.values - b.u.values)) <= 1e-6 * a.sup_norm

    def test_coefficient_validated(self, grid, eig):
        with pytest.raises(ValueError, match="invalid-coefficient"):
            solve_linear_concave(0.0, 0.0, P215, grid, eig)
        with pytest.raises(ValueError, match="invalid-coefficient"):
            solve_linear_concave(-0.1, 1.0, P215, grid, eig)

    def test_c_value_identity(self, grid, eig):
        # c * (lambda1-lam)^{-1/(p-q)} reproduces the sup norm exactly
        lam = 0.3 * eig.lambda1
        sol = solve_linear_concave(lam, 1.0, P215, grid, eig)
        rebuilt = sol.c_value * (eig.lambda1 - lam) ** (-1.0 / (P215.p - P215.q))
        assert rebuilt == pytest.approx(sol.sup_norm, rel=1e-12)

    def test_general_coeff_scaling(self, grid, eig):
        # u_coeff = coeff^{1/(p-q)} u_1 by the equation's homogeneity
        lam = 0.4 * eig.lambda1
        one = solve_linear_concave(lam, 1.0, P215, grid, eig)
        four = solve_linear_concave(lam, 4.0, P215, grid, eig)
        expo = 1.0 / (P215.p - P215.q)
        assert np.max(np.abs(four.u.values - 4.0**expo * one.u.values)) <= 1e-6 * four.sup_norm
        assert four.c_value == pytest.approx(one.c_value, rel=1e-9)


class TestSandwich:
    def test_lambda_zero_upper_is_tight(self, grid, eig):
        rep = verify_supnorm_sandwich(0.0, P215, grid, eig)
        assert rep.holds and rep.upper_defined
        assert rep.upper == pytest.approx(rep.supnorm, rel=1e-12)
        assert rep.lower == pytest.approx(
            eig.lambda1 ** (-1.0 / (P215.p - P215.q)), rel=1e-12
        )
        assert rep.lower <= rep.supnorm

    @pytest.mark.parametrize("q", [1.5, 1.8])
    @pytest.mark.parametrize("frac", [0.3, 0.5, 0.6])
    def test_holds_across_parameters(self, grid, eig, q, frac):
        params = Params(p=2.0, q=q, r=3.0)
        rep = verify_supnorm_sandwich(frac * eig.lambda1, params, grid, eig)
        assert rep.holds

    def test_q_close_to_p_bounds_tighten(self, grid, eig):
        params = Params(p=2.0, q=1.95, r=3.0)
        rep = verify_supnorm_sandwich(0.3 * eig.lambda1, params, grid, eig)
        assert rep.holds and rep.upper_defined
        assert rep.upper / rep.lower < 1.10

    def test_upper_bound_undefined_reported(self, grid, eig):
        # choose lam above ||u_{q,0}||^{q-p}: the upper bound has no meaning
        params = Params(p=2.0, q=1.5, r=3.0)
        sol0 = solve_linear_concave(0.0, 1.0, params, grid, eig)
        threshold = sol0.sup_norm ** (params.q - params.p)
        cap = (1 - 1e-3) * eig.lambda1
        assert threshold < cap, "test premise: undefined regime is reachable"
        lam = 0.5 * (threshold + cap)
        rep = verify_supnorm_sandwich(lam, params, grid, eig)
        assert not rep.upper_defined
        assert math.isnan(rep.upper)
        assert rep.holds  # lower bound still checked


class TestCConstant:
    @pytest.mark.parametrize("q", [1.5, 1.8])
    @pytest.mark.parametrize("frac", [0.0, 0.3, 0.6])
    def test_at_least_one(self, grid, eig, q, frac):
        params = Params(p=2.0, q=q, r=3.0)
        assert c_constant(frac * eig.lambda1, params, grid, eig) >= 1.0 - 1e-3

    def test_power_approaches_one_as_q_to_p(self, grid, eig):
        lam = 0.3 * eig.lambda1
        gaps = []
        for q in (1.6, 1.8, 1.9, 1.95):
            c = c_constant(lam, Params(p=2.0, q=q, r=3.0), grid, eig)
            gaps.append(abs(c ** (2.0 - q) - 1.0))
        assert all(a > b for a, b in zip(gaps, gaps[1:]))

    def test_supnorm_power_trend(self, grid, eig):
        # ||u_{q,lam}||^{q-p} sits between the rearranged sandwich endpoints
        #0 <= lambda1 - lam - ||u||^{q-p} <= lambda1 - ||u_{q,0}||^{q-p},
        # and approaches lambda1 - lam as q -> p
        lam = 0.3 * eig.lambda1
        gaps = []
        for q in (1.6, 1.8, 1.9, 1.95):
            params = Params(p=2.0, q=q, r=3.0)
            sol = solve_linear_concave(lam, 1.0, params, grid, eig)
            sol0 = solve_linear_concave(0.0, 1.0, params, grid, eig)
            power = sol.sup_norm ** (q - 2.0)
            assert power <= (eig.lambda1 - lam) * (1 + 1e-6)
            assert power >= sol0.sup_norm ** (q - 2.0) - lam - 1e-9
            gaps.append(eig.lambda1 - lam - power)
        assert all(a >= b - 1e-12 for a, b in zip(gaps, gaps[1:]))
