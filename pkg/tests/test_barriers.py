import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixlap.barriers import (
    ball_barrier,
    ball_neg_laplacian,
    blowup_barrier,
    calibrate_supersolution,
    gamma_exponent,
    power_barrier,
    torsion_function,
    verify_barrier_bounds,
)
from mixlap.domain import boundary_distance, make_grid
from mixlap.errors import DomainError, OutOfWindow, WindowTooThin
from mixlap.fraclap import FracParams, assemble_operator


@pytest.fixture(scope="module")
def grid():
    return make_grid(-1.0, 1.0, 511, 0.0)


class TestTorsion:
    def test_center_value(self, grid):
        tau = torsion_function(grid)
        assert tau.values[grid.n // 2] == pytest.approx(0.5, rel=1e-14)
        assert tau.closed_form_flag

    def test_tridiagonal_matches_closed_form(self, grid):
        a = torsion_function(grid).values
        b = torsion_function(grid, method="solve").values
        assert np.abs(a - b).max() <= 1e-12

    def test_hopf_ratio(self):
        # tau/delta at the node nearest a tends to (b-a)/2 under refinement
        prev = None
        for n in (127, 255, 511):
            g = make_grid(-1.0, 1.0, n, 0.0)
            tau = torsion_function(g).values
            d = boundary_distance(g).values
            err = abs(tau[0] / d[0] - 1.0)
            if prev is not None:
                assert err < prev
            assert err <= g.h_mesh
            prev = err

    def test_positive_inside(self, grid):
        assert torsion_function(grid).values.min() > 0


class TestPowerBarrier:
    def test_alpha_one_is_torsion(self, grid):
        v = power_barrier(grid, 1.0)
        assert np.allclose(v.func.interior, torsion_function(grid).values)

    def test_alpha_zero_is_indicator(self, grid):
        v = power_barrier(grid, 0.0)
        assert np.all(v.func.interior == 1.0)
        assert v.func.trace_a == 1.0
        assert np.all(v.func.ext_samples == 0.0)

    def test_alpha_half_center(self, grid):
        v = power_barrier(grid, 0.5)
        assert v.func.interior[grid.n // 2] == pytest.approx(np.sqrt(0.5), rel=1e-14)
        assert v.func.trace_a == 0.0

    def test_rejects_alpha_outside(self, grid):
        with pytest.raises(DomainError):
            power_barrier(grid, 1.5)
        with pytest.raises(DomainError):
            power_barrier(grid, -0.1)

    def test_two_sided_distance_bounds(self, grid):
        d = boundary_distance(grid).values
        for alpha in (0.25, 0.5, 1.0):
            v = power_barrier(grid, alpha).func.interior
            ratio = v / d**alpha
            assert ratio.min() > 0
            assert np.isfinite(ratio.max())

    def test_ordering_in_alpha(self, grid):
        # on intervals of width <= 2 the barriers decrease as alpha grows
        v1 = power_barrier(grid, 0.25).func.interior
        v2 = power_barrier(grid, 0.75).func.interior
        assert np.all(v2 <= v1 + 1e-15)


class TestBlowupBarrier:
    def test_strip_values_exact(self, grid):
        V = blowup_barrier(grid, -0.4)
        d = boundary_distance(grid).values
        strip = d < V.delta0
        assert np.allclose(V.func.interior[strip], d[strip] ** -0.4, rtol=1e-14)
        assert np.all(np.isfinite(V.func.interior))
        assert V.func.interior.min() > 0

    def test_fill_matches_two_derivatives(self, grid):
        V = blowup_barrier(grid, -0.4)
        d0, beta = V.delta0, V.beta
        c0, c2, c4 = V.fill_coeffs
        p = lambda t: c0 + c2 * t**2 + c4 * t**4
        dp = lambda t: 2 * c2 * t + 4 * c4 * t**3
        ddp = lambda t: 2 * c2 + 12 * c4 * t**2
        assert p(d0) == pytest.approx(d0**beta, rel=1e-12)
        assert dp(d0) == pytest.approx(beta * d0 ** (beta - 1), rel=1e-12)
        assert ddp(d0) == pytest.approx(beta * (beta - 1) * d0 ** (beta - 2), rel=1e-12)

    def test_rejects_bad_beta(self, grid):
        with pytest.raises(DomainError):
            blowup_barrier(grid, 0.1)
        with pytest.raises(DomainError):
            blowup_barrier(grid, -1.2)


class TestBallBarrier:
    def test_exact_lower_bound_for_neg_laplacian(self, grid):
        # -Lap u_sigma >= 2 sigma N R^(2 sigma - 2) everywhere inside, exactly
        for sigma in (0.25, 0.5, 0.75):
            vals = ball_neg_laplacian(grid.nodes, sigma, 1.0)
            assert vals.min() >= 2.0 * sigma * 1.0 - 1e-12

    def test_discrete_fraclap_nearly_constant(self):
        g = make_grid(-1.0, 1.0, 2047, 0.0)
        sigma = 0.5
        op = assemble_operator(g, FracParams(sigma=sigma))
        vals = op.apply(ball_barrier(g, sigma, 1.0))
        keep = np.abs(g.nodes) <= 0.8
        spread = vals[keep].max() - vals[keep].min()
        assert spread <= 0.02 * np.abs(vals[keep]).max()


class TestGammaExponent:
    def test_reference_values(self):
        assert gamma_exponent(0.4, 2.0) == pytest.approx(-0.4, rel=1e-14)
        assert gamma_exponent(0.5, 1.9) == pytest.approx(-2.0 * 0.05 / 0.9, rel=1e-12)

    def test_window_endpoints(self):
        lo = (3.0 - 0.4) / (1.0 + 0.4)
        assert lo == pytest.approx(1.857142857142857)
        with pytest.raises(OutOfWindow):
            gamma_exponent(0.5, 3.0)
        with pytest.raises(OutOfWindow):
            gamma_exponent(0.4, 1.5)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(min_value=0.05, max_value=0.95), st.floats(min_value=0.0, max_value=1.0))
    def test_window_implies_range(self, sigma, frac):
        lo, hi = (3.0 - sigma) / (1.0 + sigma), 1.0 / sigma
        if lo >= hi:
            return
        p = lo + (hi - lo) * (0.001 + 0.998 * frac)
        gamma = gamma_exponent(sigma, p)
        assert -1.0 + sigma < gamma < 0.0


class TestVerifyBounds:
    def test_indicator_ratio_tends_to_known_constant(self):
        # (-Lap)^s v_0 / delta^(-2s) at shrinking delta approaches c/(2 sigma) = 1/pi
        g = make_grid(-1.0, 1.0, 2559, 0.0)
        rep = verify_barrier_bounds(power_barrier(g, 0.0), FracParams(sigma=0.5),
                                    refinements=1)
        rec = rep["records"][0]
        assert rec["pass"]
        # window ratios bracket 1/pi within 20%
        assert rec["min_ratio"][-1] == pytest.approx(1.0 / np.pi, rel=0.2)

    def test_window_too_thin(self):
        g = make_grid(-1.0, 1.0, 255, 0.0)
        with pytest.raises(WindowTooThin):
            verify_barrier_bounds(power_barrier(g, 0.5), FracParams(sigma=0.5),
                                  refinements=0)

    def test_power_barrier_local_rate(self):
        g = make_grid(-1.0, 1.0, 1279, 0.0)
        rep = verify_barrier_bounds(power_barrier(g, 0.5), FracParams(sigma=0.5),
                                    refinements=1)
        by_name = {r["kind"]: r for r in rep["records"]}
        local = by_name["neg_lap_vs_delta^-1.5"]
        assert local["pass"] and min(local["min_ratio"]) > 0


class TestCalibration:
    def test_nonexistence_supersolution(self):
        g = make_grid(-1.0, 1.0, 255, 0.0)
        cal = calibrate_supersolution("nonexistence_super", g, FracParams(sigma=0.5),
                                      p=2.0, m=1.0, alpha=0.25)
        eps = cal.coefficients["eps"]
        assert eps <= 0.5
        assert cal.residual_min >= 0.0
        w = cal.func.interior
        assert np.all(w <= 1.0) and np.all(w >= 1.0 - eps)

    def test_singular_subsolution(self):
        g = make_grid(-1.0, 1.0, 255, 0.0)
        cal = calibrate_supersolution("singular_sub", g, FracParams(sigma=0.4),
                                      p=2.0, alpha=0.25, kappa=1.0)
        assert cal.residual_max <= 0.0
        x = g.nodes
        third = (x > g.a + 2.0 / 3.0) & (x < g.b - 2.0 / 3.0)
        floor = cal.func.interior[third].min()
        assert floor > 0.0

    def test_large_supersolution(self):
        g = make_grid(-1.0, 1.0, 255, 0.0)
        cal = calibrate_supersolution("large", g, FracParams(sigma=0.4), p=2.0)
        A, B = cal.coefficients["A"], cal.coefficients["B"]
        assert np.isfinite(A) and np.isfinite(B)
        assert cal.residual_min >= 0.0
        assert cal.operator_nonneg
        # dominates A * delta^gamma in the strip
        d = boundary_distance(g).values
        gamma = cal.coefficients["gamma"]
        strip = d < (g.b - g.a) / 8.0
        assert np.all(cal.func.interior[strip] >= A * d[strip] ** gamma - 1e-9)

    def test_wrong_regime_rejected(self):
        g = make_grid(-1.0, 1.0, 255, 0.0)
        with pytest.raises(OutOfWindow):
            calibrate_supersolution("nonexistence_super", g, FracParams(sigma=0.4),
                                    p=2.0)
        with pytest.raises(OutOfWindow):
            calibrate_supersolution("singular_sub", g, FracParams(sigma=0.5), p=2.0)
