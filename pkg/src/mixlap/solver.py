"""Constructive solver for -Lap(u) + |(-Lap)^s u|^(p-1) (-Lap)^s u = f on (a, b)
with boundary values g on {a, b} and exterior values h outside.

Pipeline: the problem is homogenized by the gluing psi of the affine extension
of g with h, reducing to a zero-data unknown v = u - psi; the nonlinearity is
regularized by interior cutoffs at dyadic levels j; each regularized problem is
solved by damped Picard iteration on the map
v -> (-Lap_h)^(-1)(eta_j f - eta_j |(-Lap)^s_h v + D_psi|^(p-1) (...)), and the
levels are continued upward with warm starts until the increments stall or the
cutoff reaches the mesh scale.

Boundary diagnostics (attainment gap at the nodes nearest the endpoints,
log-log decay exponents) and monotone ladders of growing boundary data feed
the existence / non-existence / blow-up experiments.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solve_banded

from .domain import Grid1D, boundary_distance, cutoff_eta
from .errors import (
    Diverged,
    DomainError,
    LevelTooCoarse,
    LevelTooFine,
    MaxIterExceeded,
    MonotonicityViolation,
)
from .fraclap import ExtendedGridFunction, FracLapOperator, FracParams

__all__ = [
    "SingularSource",
    "ProblemSpec",
    "HomogenizedProblem",
    "SolveReport",
    "Solution",
    "homogenize",
    "dirichlet_inverse",
    "neg_laplacian",
    "nonlinear_term",
    "regularized_solve",
    "continuation_solve",
    "solve_large",
    "check_comparison",
    "ComparisonResult",
    "diagnose_boundary",
    "valid_levels",
]


@dataclass
class SingularSource:
    """Right-hand side factored as f = delta^(alpha-2) * smooth_part.

    alpha in (0, 2] is the data hypothesis of the existence theory; alpha = 0
    (f ~ delta^-2) is admitted to drive the non-existence stress experiments,
    where the a-priori bound constant alpha^-1 is meaningless and skipped.
    """

    alpha: float
    smooth_part: NDArray | float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 2.0:
            raise DomainError(f"alpha must lie in [0, 2], got {self.alpha}")

    def values(self, delta: NDArray) -> NDArray:
        f_tilde = np.broadcast_to(np.asarray(self.smooth_part, dtype=float), delta.shape)
        if not np.all(np.isfinite(f_tilde)):
            raise DomainError("smooth part of the source must be bounded")
        if self.alpha == 2.0:
            return f_tilde.copy()
        return f_tilde * delta ** (self.alpha - 2.0)


@dataclass
class ProblemSpec:
    """Data of one boundary value problem on a fixed grid."""

    grid: Grid1D
    sigma: float
    p: float
    g_a: float = 0.0
    g_b: float = 0.0
    source: SingularSource | None = None
    ext_samples: NDArray | None = None
    far_value: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise DomainError(f"sigma must lie in (0, 1), got {self.sigma}")
        if self.p < 1.0:
            raise DomainError(f"p must be >= 1, got {self.p}")
        if self.ext_samples is None:
            self.ext_samples = np.full(len(self.grid.ext_nodes), self.far_value)
        else:
            self.ext_samples = np.asarray(self.ext_samples, dtype=float)
            if not np.all(np.isfinite(self.ext_samples)):
                raise DomainError("exterior data must be bounded")

    @property
    def params(self) -> FracParams:
        return FracParams(sigma=self.sigma)

    def source_values(self) -> NDArray:
        if self.source is None:
            return np.zeros(self.grid.n)
        return self.source.values(boundary_distance(self.grid).values)


@dataclass
class HomogenizedProblem:
    """psi glues the affine extension of g with the exterior data h; D_psi is its
    nonlocal operator value at the interior nodes (it may blow up like
    delta^(-2*sigma) toward the boundary, which the level cutoffs neutralize)."""

    psi: ExtendedGridFunction
    Dspsi: NDArray
    original: ProblemSpec

    @property
    def f_values(self) -> NDArray:
        return self.original.source_values()


def homogenize(spec: ProblemSpec, operator: FracLapOperator) -> HomogenizedProblem:
    grid = spec.grid
    x = grid.nodes
    gbar = spec.g_a + (spec.g_b - spec.g_a) * (x - grid.a) / (grid.b - grid.a)
    psi = ExtendedGridFunction(
        grid=grid,
        interior=gbar,
        trace_a=spec.g_a,
        trace_b=spec.g_b,
        ext_samples=spec.ext_samples,
        far_value=spec.far_value,
    )
    return HomogenizedProblem(psi=psi, Dspsi=operator.apply(psi), original=spec)


def dirichlet_inverse(F: NDArray, grid: Grid1D) -> NDArray:
    """Tridiagonal solve of the 3-point problem -v'' = F with zero boundary values."""
    F = np.asarray(F, dtype=float)
    n = grid.n
    ab = np.zeros((3, n))
    ab[0, 1:] = -1.0
    ab[1, :] = 2.0
    ab[2, :-1] = -1.0
    return solve_banded((1, 1), ab, F * grid.h_mesh**2)


def neg_laplacian(values: NDArray, grid: Grid1D, trace_a: float = 0.0,
                  trace_b: float = 0.0) -> NDArray:
    """3-point -u'' at the interior nodes with Dirichlet couplings to the traces."""
    v = np.asarray(values, dtype=float)
    h = grid.h_mesh
    out = np.empty(grid.n)
    out[0] = 2.0 * v[0] - v[1] - trace_a
    out[-1] = 2.0 * v[-1] - v[-2] - trace_b
    if grid.n > 2:
        out[1:-1] = 2.0 * v[1:-1] - v[2:] - v[:-2]
    return out / (h * h)


def valid_levels(grid: Grid1D) -> tuple[int, int]:
    """Smallest level with a nonempty plateau and the largest mesh-resolved one."""
    j_min = 1
    while 2.0 ** (-j_min + 1) >= (grid.b - grid.a) / 2.0:
        j_min += 1
    j_max = int(np.floor(np.log2(1.0 / (4.0 * grid.h_mesh))))
    return j_min, j_max


def nonlinear_term(
    v: NDArray | ExtendedGridFunction,
    hom: HomogenizedProblem,
    operator: FracLapOperator,
    j: int,
) -> NDArray:
    """eta_j * |t|^(p-1) t with t = (-Lap)^s_h v + D_psi, v extended by zero."""
    grid = hom.original.grid
    if 2.0 ** (-j) < 4.0 * grid.h_mesh:
        raise LevelTooFine(f"level j={j}: 2^-j below 4*h = {4 * grid.h_mesh}")
    vv = v.interior if isinstance(v, ExtendedGridFunction) else np.asarray(v, dtype=float)
    eta = cutoff_eta(grid, j).values
    t = operator.apply_zero_extension(vv) + hom.Dspsi
    p = hom.original.p
    return eta * np.abs(t) ** (p - 1.0) * t


@dataclass
class SolveReport:
    levels: list[int] = field(default_factory=list)
    iterations: list[int] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    increments: list[float] = field(default_factory=list)
    sup_bound: dict = field(default_factory=dict)
    boundary_gap: float | None = None
    fitted_exponent: float | None = None
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "levels": self.levels,
            "iterations": self.iterations,
            "residuals": self.residuals,
            "increments": self.increments,
            "sup_bound": self.sup_bound,
            "boundary_gap": self.boundary_gap,
            "fitted_exponent": self.fitted_exponent,
            "wall_time": self.wall_time,
        }


@dataclass
class Solution:
    """Homogenized unknown v (zero trace/exterior), reconstruction u = v + psi."""

    v: NDArray
    u: NDArray
    j_final: int
    hom: HomogenizedProblem
    report: SolveReport

    @property
    def grid(self) -> Grid1D:
        return self.hom.original.grid


def _sup_bound_record(u: NDArray, hom: HomogenizedProblem) -> dict:
    spec = hom.original
    g_plus = max(spec.g_a, spec.g_b, 0.0)
    h_plus = max(float(np.max(spec.ext_samples, initial=0.0)), spec.far_value, 0.0)
    record: dict = {"sup_u": float(u.max()), "g_plus": g_plus, "h_plus": h_plus}
    f = hom.f_values
    f_plus_sup = float(np.maximum(f, 0.0).max(initial=0.0))
    if f_plus_sup == 0.0:
        margin = record["sup_u"] - (g_plus + h_plus)
        record["ok"] = bool(margin <= 1e-8 * max(1.0, g_plus + h_plus))
        record["margin"] = margin
    elif spec.source is not None and spec.source.alpha > 0.0:
        delta = boundary_distance(spec.grid).values
        weighted = float(np.max(delta ** (2.0 - spec.source.alpha) * np.maximum(f, 0.0)))
        excess = max(record["sup_u"] - g_plus - h_plus, 0.0)
        record["empirical_constant"] = excess * spec.source.alpha / weighted
        record["ok"] = True
    else:
        record["ok"] = None  # alpha = 0 stress source: bound not applicable
    return record


def regularized_solve(
    hom: HomogenizedProblem,
    operator: FracLapOperator,
    j: int,
    damping: float = 0.5,
    tol: float = 1e-8,
    max_iter: int = 50_000,
    v0: NDArray | None = None,
) -> Solution:
    """Damped Picard iteration for the level-j regularized problem.

    The step v <- (1-lam) v + lam (-Lap_h)^(-1)(eta_j f - P_j[v]) starts at
    lam = damping; lam is halved after three consecutive residual increases,
    a residual spike beyond 10x the best seen rejects the step and restarts
    from the best iterate, and lam relaxes back up after a long run of
    decreases.  Success means sup-norm residual <= tol at every node.
    """
    if not 0.0 < damping <= 1.0:
        raise DomainError(f"damping must lie in (0, 1], got {damping}")
    if tol <= 0.0:
        raise DomainError("tol must be positive")
    grid = hom.original.grid
    eta = cutoff_eta(grid, j).values
    if 2.0 ** (-j) < 4.0 * grid.h_mesh:
        raise LevelTooFine(f"level j={j}: 2^-j below 4*h = {4 * grid.h_mesh}")
    p = hom.original.p
    rhs = eta * hom.f_values
    t0 = time.perf_counter()
    v = np.zeros(grid.n) if v0 is None else np.array(v0, dtype=float)
    lam = damping
    inc_run = dec_run = 0
    res_prev = np.inf
    res_best = np.inf
    res0 = None
    v_best = v.copy()
    it = 0
    for it in range(max_iter):
        t = operator.apply_zero_extension(v) + hom.Dspsi
        P = eta * np.abs(t) ** (p - 1.0) * t
        res = float(np.abs(neg_laplacian(v, grid) + P - rhs).max())
        if res0 is None:
            res0 = res
        if res <= tol:
            break
        if res < res_best:
            res_best, v_best = res, v.copy()
        if res > 10.0 * max(res_best, tol):
            # overshoot: reject the step, restart from the best iterate
            lam *= 0.5
            if lam < 1e-12:
                raise Diverged(f"damping underflow at level {j} (residual {res:.3e})")
            v = v_best.copy()
            res_prev = res_best
            inc_run = dec_run = 0
            continue
        if res > 1e6 * max(1.0, res0):
            raise Diverged(f"residual {res:.3e} at level {j} after {it} iterations")
        if res > res_prev:
            inc_run += 1
            dec_run = 0
            if inc_run >= 3:
                lam *= 0.5
                inc_run = 0
                if lam < 1e-12:
                    raise Diverged(f"damping underflow at level {j}")
        else:
            dec_run += 1
            inc_run = 0
            if dec_run >= 20:
                lam = min(lam * 1.26, damping)
                dec_run = 0
        res_prev = res
        v = (1.0 - lam) * v + lam * dirichlet_inverse(rhs - P, grid)
    else:
        raise MaxIterExceeded(
            f"level {j}: residual {res:.3e} > tol {tol} after {max_iter} iterations"
        )
    u = v + hom.psi.interior
    report = SolveReport(
        levels=[j],
        iterations=[it],
        residuals=[res],
        sup_bound=_sup_bound_record(u, hom),
        wall_time=time.perf_counter() - t0,
    )
    return Solution(v=v, u=u, j_final=j, hom=hom, report=report)


def continuation_solve(
    hom: HomogenizedProblem,
    operator: FracLapOperator,
    tol: float = 1e-8,
    level_tol: float = 1e-6,
    damping: float = 0.5,
    max_iter: int = 50_000,
) -> Solution:
    """Solve the regularized ladder j_min..j_max with warm starts.

    Stops early once the sup-norm increment between consecutive levels falls
    below level_tol; returns the last level with the full increment history
    (the discrete trace of the compactness step).
    """
    grid = hom.original.grid
    j_min, j_max = valid_levels(grid)
    if j_max - j_min < 2:
        raise LevelTooCoarse(
            f"grid admits only levels {j_min}..{j_max}; need at least 3"
        )
    t0 = time.perf_counter()
    report = SolveReport()
    v = None
    sol = None
    for j in range(j_min, j_max + 1):
        sol = regularized_solve(
            hom, operator, j, damping=damping, tol=tol, max_iter=max_iter, v0=v
        )
        inc = float(np.abs(sol.v - v).max()) if v is not None else np.inf
        v = sol.v
        report.levels.append(j)
        report.iterations.append(sol.report.iterations[0])
        report.residuals.append(sol.report.residuals[0])
        report.increments.append(inc)
        if inc <= level_tol:
            break
    report.sup_bound = sol.report.sup_bound
    report.wall_time = time.perf_counter() - t0
    return Solution(v=sol.v, u=sol.u, j_final=sol.j_final, hom=hom, report=report)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def _fit_loglog(delta: NDArray, vals: NDArray, lo: float, hi: float) -> tuple[float | None, int]:
    mask = (delta >= lo) & (delta <= hi) & (np.abs(vals) > 1e-13 * max(1.0, np.abs(vals).max()))
    npts = int(mask.sum())
    if npts < 8:
        return None, npts
    slope = float(np.polyfit(np.log(delta[mask]), np.log(np.abs(vals[mask])), 1)[0])
    return slope, npts


def diagnose_boundary(sol: Solution, spec: ProblemSpec | None = None,
                      reference: str = "psi") -> dict:
    """Boundary attainment gap and fitted decay exponent of a solution.

    The gap is |u - g| at the node nearest each endpoint.  The exponent is the
    least-squares slope of log|u - psi| (or log|u| with reference="zero")
    against log delta over nodes where the final-level cutoff is identically
    one, capped above by (b-a)/8; fitting below the cutoff scale would measure
    the regularization, not the equation.
    """
    spec = spec if spec is not None else sol.hom.original
    grid = spec.grid
    if grid.n < 64:
        raise DomainError("boundary diagnosis needs at least 64 nodes")
    delta = boundary_distance(grid).values
    gap = max(abs(sol.u[0] - spec.g_a), abs(sol.u[-1] - spec.g_b))
    vals = sol.v if reference == "psi" else sol.u
    lo = max(4.0 * grid.h_mesh, 2.0 ** (-sol.j_final + 1))
    hi = (grid.b - grid.a) / 8.0
    slope, npts = _fit_loglog(delta, vals, lo, hi)
    return {
        "boundary_gap": float(gap),
        "fitted_exponent": slope,
        "window": [lo, hi],
        "n_points": npts,
        "exponent_defined": slope is not None,
    }


# ---------------------------------------------------------------------------
# comparison checking
# ---------------------------------------------------------------------------


@dataclass
class ComparisonResult:
    passed: bool
    hypothesis_ok: bool
    hypothesis_failures: NDArray
    violations: NDArray

    def __bool__(self) -> bool:
        return self.passed


def check_comparison(
    sub: ExtendedGridFunction,
    super_: ExtendedGridFunction,
    spec: ProblemSpec,
    operator: FracLapOperator,
    atol: float = 1e-9,
) -> ComparisonResult:
    """Verify the discrete comparison implication for the nonlinear operator.

    Hypothesis: ordering of traces, exterior samples and far field, plus the
    nodewise inequality L[sub] <= L[super] with
    L[w] = -Lap_h w + |(-Lap)^s_h w|^(p-1) (-Lap)^s_h w.  Nodes coupled to an
    infinite trace satisfy the inequality automatically.  The conclusion
    sub <= super is checked at every interior node and its violations are
    returned; soundness of the comparison principle means hypothesis_ok
    implies passed, which the discrete sign structure guarantees.
    """
    p = spec.p
    scale = max(
        1.0,
        float(np.abs(sub.interior).max()),
        float(np.abs(super_.interior[np.isfinite(super_.interior)]).max(initial=0.0)),
    )
    tol = atol * scale
    ordered = (
        sub.trace_a <= super_.trace_a + tol
        and sub.trace_b <= super_.trace_b + tol
        and bool(np.all(sub.ext_samples <= super_.ext_samples + tol))
        and sub.far_value <= super_.far_value + tol
    )
    if not ordered:
        raise DomainError("precondition failed: sub > super on trace or exterior data")

    def lhs(w: ExtendedGridFunction) -> NDArray:
        ta = w.trace_a if np.isfinite(w.trace_a) else 0.0
        tb = w.trace_b if np.isfinite(w.trace_b) else 0.0
        lap = neg_laplacian(w.interior, w.grid, ta, tb)
        t = operator.apply(w)
        return lap + np.abs(t) ** (p - 1.0) * t

    L_sub, L_sup = lhs(sub), lhs(super_)
    op_scale = max(1.0, float(np.abs(L_sub).max()), float(np.abs(L_sup).max()))
    hyp = L_sub <= L_sup + atol * op_scale
    # infinite traces dominate any finite left-hand side at the adjacent node
    for w, side in ((super_.trace_a, 0), (super_.trace_b, -1)):
        if np.isinf(w):
            hyp[side] = True
    hyp_failures = np.flatnonzero(~hyp)
    violations = np.flatnonzero(sub.interior > super_.interior + tol)
    return ComparisonResult(
        passed=len(violations) == 0,
        hypothesis_ok=len(hyp_failures) == 0,
        hypothesis_failures=hyp_failures,
        violations=violations,
    )


# ---------------------------------------------------------------------------
# monotone ladder toward boundary blow-up
# ---------------------------------------------------------------------------


@dataclass
class LargeSolveResult:
    g_values: list[float]
    solutions: list[Solution]
    limit_estimate: NDArray
    dominated: bool
    domination_scale: float
    fitted_exponent: float | None
    supersolution: "object"  # CalibratedSupersolution


def solve_large(
    grid: Grid1D,
    sigma: float,
    p: float,
    operator: FracLapOperator,
    j_data_max: int = 6,
    tol: float = 1e-8,
    damping: float = 0.5,
    monotonicity_slack: float = 1e-6,
) -> LargeSolveResult:
    """Monotone ladder of solutions with boundary data g = 1, 2, 4, ..., 2^j_data_max.

    Asserts nodewise monotone growth (MonotonicityViolation otherwise, a
    discretization artifact flag) and domination by the calibrated blow-up
    supersolution, scaled by the smallest power of two that covers the top
    boundary datum near the validated window (upward scalings of it remain
    supersolutions because its nonlocal operator value is nonnegative).  The
    blow-up exponent is fitted on the limit estimate against log delta.
    """
    from .barriers import calibrate_supersolution, gamma_exponent

    gamma_exponent(sigma, p)  # validates the (sigma, p) window
    sols: list[Solution] = []
    g_values: list[float] = []
    prev_u: NDArray | None = None
    for k in range(j_data_max + 1):
        g = float(2.0**k)
        spec = ProblemSpec(grid=grid, sigma=sigma, p=p, g_a=g, g_b=g)
        hom = homogenize(spec, operator)
        sol = continuation_solve(hom, operator, tol=tol, damping=damping)
        if prev_u is not None:
            worst = float((prev_u - sol.u).max())
            if worst > monotonicity_slack * max(1.0, g):
                raise MonotonicityViolation(
                    f"ladder step g={g}: previous solution exceeds new one by {worst:.3e}"
                )
        prev_u = sol.u
        sols.append(sol)
        g_values.append(g)

    limit = sols[-1].u
    sup = calibrate_supersolution("large", grid, FracParams(sigma=sigma), p=p,
                                  operator=operator)
    delta = boundary_distance(grid).values
    idx = np.flatnonzero(delta >= 4.0 * grid.h_mesh)
    m_scale = 1.0
    edge = float(sup.func.interior[idx].min())
    while m_scale * edge < g_values[-1] and m_scale < 2.0**40:
        m_scale *= 2.0
    dominated = bool(np.all(limit[idx] <= m_scale * sup.func.interior[idx] + 1e-9))
    lo = max(4.0 * grid.h_mesh, 2.0 ** (-sols[-1].j_final + 1))
    slope, _ = _fit_loglog(delta, limit, lo, (grid.b - grid.a) / 8.0)
    return LargeSolveResult(
        g_values=g_values,
        solutions=sols,
        limit_estimate=limit,
        dominated=dominated,
        domination_scale=m_scale,
        fitted_exponent=slope,
        supersolution=sup,
    )
