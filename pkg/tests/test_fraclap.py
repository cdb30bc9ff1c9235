import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from mixlap.barriers import ball_barrier
from mixlap.domain import make_grid
from mixlap.errors import DomainError, GridMismatch
from mixlap.fraclap import (
    ExtendedGridFunction,
    FracParams,
    assemble_operator,
    closed_form_reference,
    eval_pointwise,
    normalization_constant,
)


def ones_function(grid, value=1.0):
    return ExtendedGridFunction(
        grid=grid,
        interior=np.full(grid.n, value),
        trace_a=value,
        trace_b=value,
        ext_samples=np.full(len(grid.ext_nodes), value),
        far_value=value,
    )


class TestNormalizationConstant:
    def test_half(self):
        assert normalization_constant(1, 0.5) == pytest.approx(1.0 / np.pi, rel=1e-14)

    def test_quarter_closed_form(self):
        # Gamma(-1/4) = -4 Gamma(3/4) collapses the formula to sqrt(2)/(4 sqrt(pi))
        assert normalization_constant(1, 0.25) == pytest.approx(
            np.sqrt(2.0) / (4.0 * np.sqrt(np.pi)), rel=1e-14
        )

    @pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
    @pytest.mark.parametrize("sigma", [0.1, 0.25, 0.5, 0.75, 0.9])
    def test_fourier_oracle(self, sigma):
        # both sides computed by quadrature, independent of the Gamma formula:
        # c * int_0^inf (2 - 2 exp(-z^2)) z^(-1-2s) dz  ==  value at 0 of the
        # multiplier side (1/pi) int_0^inf xi^(2s) sqrt(pi) exp(-xi^2/4) dxi
        lhs_integral, _ = quad(
            lambda z: (2.0 - 2.0 * np.exp(-(z**2))) * z ** (-1.0 - 2.0 * sigma),
            0.0, np.inf, limit=200,
        )
        rhs, _ = quad(
            lambda xi: xi ** (2.0 * sigma) * np.exp(-(xi**2) / 4.0) / np.sqrt(np.pi),
            0.0, np.inf, limit=200,
        )
        assert normalization_constant(1, sigma) == pytest.approx(
            rhs / lhs_integral, rel=1e-6
        )

    def test_rejects_bad_sigma(self):
        with pytest.raises(DomainError):
            normalization_constant(1, 1.0)
        with pytest.raises(DomainError):
            normalization_constant(1, 0.0)

    def test_continuity_in_sigma(self):
        s = np.linspace(0.05, 0.95, 50)
        c = np.array([normalization_constant(1, si) for si in s])
        assert np.all(c > 0)
        assert np.abs(np.diff(c)).max() < 0.2


class TestClosedForms:
    def test_getoor_value_is_gamma(self):
        # c * B(sigma, 1-sigma) * |bd B_1| / 2 collapses to Gamma(2 sigma + 1) in 1-D
        for sigma in (0.25, 0.5, 0.75):
            v = closed_form_reference("getoor", FracParams(sigma=sigma), 0.3)
            assert v == pytest.approx(gamma_fn(2.0 * sigma + 1.0), rel=1e-13)

    def test_getoor_unit_at_half(self):
        assert closed_form_reference("getoor", FracParams(sigma=0.5), 0.0) == pytest.approx(1.0)

    def test_indicator_center(self):
        v = closed_form_reference("indicator", FracParams(sigma=0.5), 0.0)
        assert v == pytest.approx(2.0 / np.pi, rel=1e-14)

    def test_halfline_power_harmonic(self):
        assert closed_form_reference("halfline_power", FracParams(sigma=0.7), 2.0) == 0.0

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            closed_form_reference("getoor", FracParams(sigma=0.5), 1.5)
        with pytest.raises(DomainError):
            closed_form_reference("halfline_power", FracParams(sigma=0.5), -1.0)
        with pytest.raises(DomainError):
            closed_form_reference("nope", FracParams(sigma=0.5), 0.0)


class TestEvaluator:
    def test_annihilates_constants(self, grid_257, op_257_half):
        for value in (1.0, 3.7, -250.0):
            u = ones_function(grid_257, value)
            assert np.abs(op_257_half.apply(u)).max() <= 1e-10 * max(1.0, abs(value))

    def test_rowsum_invariant(self):
        for n, sigma in ((256, 0.5), (1024, 0.25), (1024, 0.75), (4096, 0.75)):
            g = make_grid(-1.0, 1.0, n, 0.0)
            op = assemble_operator(g, FracParams(sigma=sigma))
            u = ones_function(g)
            assert np.abs(op.apply(u)).max() <= 1e-10

    def test_getoor_center(self):
        g = make_grid(-1.0, 1.0, 511, 0.0)
        params = FracParams(sigma=0.5)
        u = ball_barrier(g, 0.5, 1.0)
        got = eval_pointwise(u, params, g.n // 2)
        assert got == pytest.approx(1.0, abs=5e-3)

    def test_indicator_center(self, grid_257, op_257_half):
        u = ExtendedGridFunction(grid=grid_257, interior=np.ones(257), trace_a=1.0,
                                 trace_b=1.0)
        got = op_257_half.apply(u)[128]
        assert got == pytest.approx(2.0 / np.pi, abs=6e-3)

    def test_matrix_equals_pointwise(self, grid_257, rng):
        for sigma in (0.3, 0.5, 0.8):
            params = FracParams(sigma=sigma)
            op = assemble_operator(grid_257, params)
            u = ExtendedGridFunction(
                grid=grid_257,
                interior=rng.normal(size=257),
                ext_samples=rng.normal(size=len(grid_257.ext_nodes)),
                far_value=float(rng.normal()),
            )
            applied = op.apply(u)
            for i in rng.integers(0, 257, size=10):
                assert abs(applied[i] - eval_pointwise(u, params, int(i))) <= 1e-12 * (
                    1.0 + abs(applied[i])
                )

    def test_small_matrix_diagonally_dominant(self):
        g = make_grid(-1.0, 1.0, 3, 1.0)
        op = assemble_operator(g, FracParams(sigma=0.5))
        W = op.weights
        assert np.all(np.diag(W) > 0)
        offsum = np.sum(np.abs(W), axis=1) - np.abs(np.diag(W))
        assert np.all(np.diag(W) > offsum)

    def test_grid_mismatch(self, grid_257, op_257_half):
        other = make_grid(-1.0, 1.0, 255, 0.0)
        u = ExtendedGridFunction(grid=other, interior=np.zeros(255))
        with pytest.raises(GridMismatch):
            op_257_half.apply(u)

    def test_max_principle_seed(self, rng):
        # global max at an interior node forces a nonnegative evaluation
        g = make_grid(-1.0, 1.0, 63, 0.25)
        for sigma in (0.25, 0.5, 0.75):
            op = assemble_operator(g, FracParams(sigma=sigma))
            scale = np.abs(op.weights).sum(axis=1).max()
            for _ in range(40):
                interior = rng.normal(size=63)
                ext = rng.normal(size=len(g.ext_nodes))
                far = float(rng.normal())
                i = int(np.argmax(interior))
                if interior[i] < max(ext.max(), far):
                    interior[i] = max(ext.max(), far) + abs(rng.normal())
                u = ExtendedGridFunction(grid=g, interior=interior, ext_samples=ext,
                                         far_value=far)
                assert op.apply(u)[i] >= -1e-12 * scale

    def test_scaling_property(self):
        # evaluating u(lambda .) equals lambda^(2 sigma) (-Lap)^s u (lambda x)
        lam, sigma, n = 2.0, 0.6, 127
        params = FracParams(sigma=sigma)
        g1 = make_grid(-1.0, 1.0, n, 1.0)
        g2 = make_grid(-lam, lam, n, lam)

        def f(x):
            return np.exp(-((lam * x / 2.0) ** 2))  # on g2 scale: exp(-(x/2)^2)

        u1 = ExtendedGridFunction.from_callable(g1, lambda x: f(x))
        u2 = ExtendedGridFunction.from_callable(g2, lambda x: f(x / lam))
        v1 = assemble_operator(g1, params).apply(u1)
        v2 = assemble_operator(g2, params).apply(u2)
        assert np.allclose(v1, lam ** (2 * sigma) * v2, rtol=0, atol=1e-10)

    def test_exterior_data_enters(self, grid_257, op_257_half):
        u0 = ExtendedGridFunction(grid=grid_257, interior=np.zeros(257))
        u1 = ExtendedGridFunction(
            grid=grid_257, interior=np.zeros(257),
            ext_samples=np.ones(len(grid_257.ext_nodes)), far_value=1.0,
        )
        # negative exterior contribution pulls the evaluation down
        assert np.all(op_257_half.apply(u1) < op_257_half.apply(u0))


class TestHarmonicPowers:
    def test_sigma_power_refinement(self):
        # residual of x_+^(sigma-1) on a window decreases by >= 1.5x per doubling
        sigma = 0.75
        params = FracParams(sigma=sigma)
        X = 16.0
        prev = None
        for n in (255, 511, 1023):
            g = make_grid(0.0, X, n, 0.0)
            u = ExtendedGridFunction(
                grid=g,
                interior=g.nodes ** (sigma - 1.0),
                trace_a=0.0, trace_b=X ** (sigma - 1.0),
                ext_samples=np.array([0.0, X ** (sigma - 1.0)]),
            )
            op = assemble_operator(g, params)
            vals = op.apply(u)
            window = (g.nodes >= 2.0) & (g.nodes <= 6.0)
            idx = np.flatnonzero(window)
            corr = np.array([
                params.c_norm * quad(
                    lambda z, xx=g.nodes[i]: (xx + z) ** (sigma - 1.0)
                    * z ** (-1.0 - 2.0 * sigma),
                    X - g.nodes[i], np.inf, limit=200,
                )[0]
                for i in idx
            ])
            res = np.abs(vals[idx] - corr).max()
            if prev is not None:
                assert prev / res >= 1.5
            prev = res


def test_getoor_error_decreases_under_refinement():
    from scipy.special import gamma as G

    errs = []
    for n in (255, 511, 1023):
        g = make_grid(-1.0, 1.0, n, 0.0)
        op = assemble_operator(g, FracParams(sigma=0.5))
        vals = op.apply(ball_barrier(g, 0.5, 1.0))
        keep = np.abs(g.nodes) <= 0.8
        errs.append(np.abs(vals[keep] - G(2.0)).max() / G(2.0))
    assert errs[0] > errs[1] > errs[2]
