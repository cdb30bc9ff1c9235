"""Geometry of the 1-D domain: grids, boundary distance, cutoffs, dyadic partitions.

The interval (a, b) is discretized with n interior nodes at uniform spacing
h = (b-a)/(n+1).  An exterior sampling zone of half-width ``ext_radius``
(an integer multiple of h) extends the sample set to [a-L, a] and [b, b+L],
endpoints included; beyond it functions are treated as constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidGeometry, LevelTooCoarse


def smoothstep(t: NDArray | float) -> NDArray | float:
    """Quintic smoothstep 6t^5 - 15t^4 + 10t^3, clamped to [0, 1].

    C^2 at both ends and satisfies smoothstep(t) + smoothstep(1-t) = 1,
    which is what makes the dyadic partition below telescope exactly.
    """
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def unit_bump(t: NDArray | float) -> NDArray:
    """C^2 bump supported in (-1, 1) with unit_bump(0) = 1 and
    sum_m unit_bump(t - m) = 1 for every real t."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    left = (t > -1.0) & (t <= 0.0)
    right = (t > 0.0) & (t < 1.0)
    out[left] = smoothstep(t[left] + 1.0)
    out[right] = smoothstep(1.0 - t[right])
    return out


def _readonly(a: NDArray) -> NDArray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid1D:
    """Uniform mesh on (a, b) with an exterior sampling zone.

    ``nodes`` are the interior nodes a + i*h, i = 1..n.  ``ext_nodes`` are the
    samples in [a-L, a] and [b, b+L] at the same spacing, boundary points
    included; they carry exterior-side values of grid functions.
    """

    a: float
    b: float
    n: int
    h_mesh: float
    ext_radius: float
    nodes: NDArray = field(repr=False)
    ext_nodes: NDArray = field(repr=False)

    @property
    def n_ext_side(self) -> int:
        """Number of exterior steps per side (L / h)."""
        return (len(self.ext_nodes) - 2) // 2

    @property
    def sample_coords(self) -> NDArray:
        """All sample coordinates in increasing order: [a-L..a], interior, [b..b+L]."""
        m = self.n_ext_side
        return np.concatenate([self.ext_nodes[: m + 1], self.nodes, self.ext_nodes[m + 1 :]])

    def index_of_nearest(self, x: float) -> int:
        return int(np.argmin(np.abs(self.nodes - x)))


@dataclass(frozen=True)
class DistanceField:
    """Distance to the complement of (a, b) at the interior nodes."""

    grid: Grid1D
    values: NDArray = field(repr=False)


@dataclass(frozen=True)
class CutoffEta:
    """Interior cutoff at level j: 0 where delta <= 2^-j, 1 where delta >= 2^-j+1."""

    grid: Grid1D
    j: int
    values: NDArray = field(repr=False)


@dataclass(frozen=True)
class DyadicPartition:
    """Partition of unity subordinate to the dyadic boundary layers.

    Piece k is supported where 2^-k-1 < delta < 2^-k+1 and the pieces sum to
    one at every interior node.
    """

    grid: Grid1D
    k_range: tuple[int, int]
    pieces: NDArray = field(repr=False)  # shape (n_pieces, n)

    def piece(self, k: int) -> NDArray:
        k_min, k_max = self.k_range
        if not k_min <= k <= k_max:
            return np.zeros(self.grid.n)
        return self.pieces[k - k_min]


def make_grid(a: float, b: float, n: int, ext_radius: float) -> Grid1D:
    """Build a uniform grid with n interior nodes and exterior half-width ext_radius.

    ext_radius must be a nonnegative integer multiple of h = (b-a)/(n+1).
    """
    if not (a < b):
        raise InvalidGeometry(f"need a < b, got a={a}, b={b}")
    if n < 3:
        raise InvalidGeometry(f"need n >= 3, got n={n}")
    if ext_radius < 0:
        raise InvalidGeometry(f"ext_radius must be >= 0, got {ext_radius}")
    h = (b - a) / (n + 1)
    steps = ext_radius / h
    m = int(round(steps))
    if abs(steps - m) > 1e-12 * (1.0 + steps):
        raise InvalidGeometry(
            f"ext_radius={ext_radius} is not an integer multiple of h={h}"
        )
    nodes = a + h * np.arange(1, n + 1)
    left = a - h * np.arange(m, -1, -1)
    right = b + h * np.arange(0, m + 1)
    return Grid1D(
        a=float(a),
        b=float(b),
        n=int(n),
        h_mesh=h,
        ext_radius=m * h,
        nodes=_readonly(nodes),
        ext_nodes=_readonly(np.concatenate([left, right])),
    )


def boundary_distance(grid: Grid1D) -> DistanceField:
    """delta(x_i) = min(x_i - a, b - x_i) at the interior nodes."""
    d = np.minimum(grid.nodes - grid.a, grid.b - grid.nodes)
    return DistanceField(grid=grid, values=_readonly(d))


def cutoff_eta(grid: Grid1D, j: int) -> CutoffEta:
    """Smoothstep cutoff vanishing on {delta <= 2^-j}, equal to one on {delta >= 2^-j+1}."""
    r = 2.0 ** (-j)
    if 2.0 * r >= (grid.b - grid.a) / 2.0:
        raise LevelTooCoarse(
            f"level j={j}: plateau {{delta >= {2*r}}} is empty on ({grid.a}, {grid.b})"
        )
    delta = boundary_distance(grid).values
    vals = smoothstep((delta - r) / r)
    return CutoffEta(grid=grid, j=int(j), values=_readonly(vals))


def dyadic_partition(grid: Grid1D) -> DyadicPartition:
    """Pieces zeta_k(x) = unit_bump(log2(1/delta(x)) - k) over the relevant k."""
    delta = boundary_distance(grid).values
    lev = np.log2(1.0 / delta)
    k_min = int(np.floor(lev.min())) - 1
    k_max = int(np.ceil(lev.max())) + 1
    pieces = np.stack([unit_bump(lev - k) for k in range(k_min, k_max + 1)])
    # trim identically-zero extremes but keep a contiguous range
    nz = np.flatnonzero(pieces.max(axis=1) > 0.0)
    lo, hi = int(nz[0]), int(nz[-1])
    return DyadicPartition(
        grid=grid,
        k_range=(k_min + lo, k_min + hi),
        pieces=_readonly(pieces[lo : hi + 1]),
    )
