import numpy as np
import pytest

from plap.core import SolverConfig
from plap.eigen import (
    check_supersolution,
    first_eigenpair,
    positive_bubble,
    rayleigh_quotient,
)
from plap.grid import GridFunction, make_grid, sup_norm

from oracles import lambda1_exact, lambda1_quadrature


@pytest.fixture(scope="module")
def eig_p2():
    return first_eigenpair(2.0, make_grid(0, 1, 256))


class TestOracleConsistency:
    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
    def test_formula_matches_quadrature(self, p):
        # two independent routes to the classical eigenvalue
        assert lambda1_exact(p) == pytest.approx(lambda1_quadrature(p), rel=1e-8)

    def test_p2_is_pi_squared(self):
        assert lambda1_exact(2.0) == pytest.approx(np.pi**2, rel=1e-14)


class TestFirstEigenpair:
    def test_p2_converges_to_pi_squared(self):
        eig = first_eigenpair(2.0, make_grid(0, 1, 512))
        assert eig.lambda1 == pytest.approx(np.pi**2, rel=1e-4)

    def test_p2_eigenfunction_is_sine(self):
        g = make_grid(0, 1, 512)
        eig = first_eigenpair(2.0, g)
        u = eig.eigenfunction.values / sup_norm(eig.eigenfunction)
        assert np.max(np.abs(u - np.sin(np.pi * g.nodes()))) < 1e-4

    @pytest.mark.parametrize("p", [1.5, 3.0])
    def test_general_p_matches_classical_value(self, p):
        eig = first_eigenpair(p, make_grid(0, 1, 512))
        assert eig.lambda1 == pytest.approx(lambda1_exact(p), rel=5e-3)

    def test_domain_scaling(self):
        # lambda1 scales as length^{-p}
        n = 256
        for p in (2.0, 3.0):
            e1 = first_eigenpair(p, make_grid(0, 1, n))
            e2 = first_eigenpair(p, make_grid(0, 2, n))
            assert e1.lambda1 / e2.lambda1 == pytest.approx(2.0**p, rel=1e-9)

    def test_positive_eigenfunction_unit_norm(self):
        from plap.grid import lp_norm

        for p in (1.5, 2.0, 3.0):
            eig = first_eigenpair(p, make_grid(0, 1, 128))
            assert np.all(eig.eigenfunction.interior() > 0)
            assert lp_norm(eig.eigenfunction, p) == pytest.approx(1.0, rel=1e-12)

    def test_rayleigh_history_non_increasing(self):
        for p in (1.5, 2.0, 3.0):
            eig = first_eigenpair(p, make_grid(0, 1, 256))
            h = eig.rayleigh_history
            assert len(h) == eig.iterations + 1
            for a, b in zip(h, h[1:]):
                assert b <= a + 1e-9 * a

    def test_grid_refinement_contracts(self):
        # |lambda1(h) - lambda1(h/2)| shrinks by at least 2x per refinement
        for p in (1.5, 2.0, 3.0):
            lams = [first_eigenpair(p, make_grid(0, 1, n)).lambda1 for n in (64, 128, 256)]
            d1 = abs(lams[0] - lams[1])
            d2 = abs(lams[1] - lams[2])
            assert d1 >= 2.0 * d2

    def test_random_start_same_eigenfunction(self):
        rng = np.random.default_rng(7)
        g = make_grid(0, 1, 256)
        vals = np.zeros(g.n_cells + 1)
        vals[1:-1] = (1 + 0.5 * rng.random(g.n_interior)) * positive_bubble(g).interior()
        for p in (2.0, 3.0):
            a = first_eigenpair(p, g)
            b = first_eigenpair(p, g, start=GridFunction(g, vals))
            assert a.lambda1 == pytest.approx(b.lambda1, rel=1e-10)
            assert np.max(np.abs(a.eigenfunction.values - b.eigenfunction.values)) < 1e-6

    def test_nonpositive_start_rejected(self):
        g = make_grid(0, 1, 16)
        bad = GridFunction.from_callable(g, lambda x: np.sin(2 * np.pi * x))
        with pytest.raises(ValueError, match="not-positive"):
            first_eigenpair(2.0, g, start=bad)

    def test_max_outer_exhaustion(self):
        with pytest.raises(RuntimeError, match="max-iters"):
            first_eigenpair(3.0, make_grid(0, 1, 128), max_outer=1)

    def test_p_validated(self):
        with pytest.raises(ValueError, match="p-out-of-range"):
            first_eigenpair(0.5, make_grid(0, 1, 16))


class TestRayleighQuotient:
    def test_eigenfunction_attains_lambda1(self, eig_p2):
        assert rayleigh_quotient(eig_p2.eigenfunction, 2.0) == pytest.approx(
            eig_p2.lambda1, rel=1e-12
        )

    def test_minimality_over_random_functions(self, eig_p2):
        rng = np.random.default_rng(42)
        g = eig_p2.eigenfunction.grid
        for _ in range(25):
            v = np.zeros(g.n_cells + 1)
            v[1:-1] = rng.normal(size=g.n_interior)
            assert rayleigh_quotient(GridFunction(g, v), 2.0) >= eig_p2.lambda1 * (1 - 1e-8)

    def test_zero_homogeneity(self, eig_p2):
        u = eig_p2.eigenfunction
        scaled = GridFunction(u.grid, -2.7 * u.values)
        assert rayleigh_quotient(scaled, 2.0) == pytest.approx(
            rayleigh_quotient(u, 2.0), rel=1e-12
        )

    def test_zero_function_rejected(self):
        with pytest.raises(ValueError, match="zero-function"):
            rayleigh_quotient(GridFunction.zeros(make_grid(0, 1, 8)), 2.0)


class TestSupersolutionCertificate:
    @pytest.mark.parametrize("p", [2.0, 3.0])
    def test_eigenfunction_certifies_below_lambda1(self, p):
        eig = first_eigenpair(p, make_grid(0, 1, 256))
        cert = check_supersolution(eig.eigenfunction, 0.99 * eig.lambda1, p)
        assert cert.holds
        assert cert.margin > 0

    @pytest.mark.parametrize("p", [2.0, 3.0])
    def test_eigenfunction_fails_above_lambda1(self, p):
        eig = first_eigenpair(p, make_grid(0, 1, 256))
        cert = check_supersolution(eig.eigenfunction, 1.01 * eig.lambda1, p)
        assert not cert.holds
        assert cert.margin < 0
        assert 1 <= cert.worst_node <= 255

    def test_not_positive_rejected(self):
        g = make_grid(0, 1, 16)
        v = GridFunction.from_callable(g, lambda x: np.sin(2 * np.pi * x))
        with pytest.raises(ValueError, match="not-positive"):
            check_supersolution(v, 1.0, 2.0)

    def test_negative_level_rejected(self, eig_p2):
        with pytest.raises(ValueError, match="invalid-level"):
            check_supersolution(eig_p2.eigenfunction, -1.0, 2.0)

    def test_bisection_recovers_lambda1(self, eig_p2):
        # sup of certifiable levels equals lambda1 (checked by bisection)
        u, lam1 = eig_p2.eigenfunction, eig_p2.lambda1
        lo, hi = 0.5 * lam1, 1.5 * lam1
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if check_supersolution(u, mid, 2.0).holds:
                lo = mid
            else:
                hi = mid
        assert 0.5 * (lo + hi) == pytest.approx(lam1, rel=1e-4)
