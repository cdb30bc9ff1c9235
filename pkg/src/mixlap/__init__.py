"""Desk-scale solver and stress-tester for the 1-D mixed local/nonlocal problem

    -Lap(u) + |(-Lap)^sigma u|^(p-1) (-Lap)^sigma u = f   in (a, b),
    u = g on {a, b},   u = h outside [a, b].

Subpackages: domain (grids, cutoffs, partitions), fraclap (the nonlocal
operator), barriers (closed-form sub/supersolutions), solver (homogenization,
regularized fixed-point continuation, diagnostics), lototsky (boundary-weighted
norms), experiments/cli (config-driven runs with reports and figures).
"""

from .domain import (
    CutoffEta,
    DistanceField,
    DyadicPartition,
    Grid1D,
    boundary_distance,
    cutoff_eta,
    dyadic_partition,
    make_grid,
)
from .fraclap import (
    ExtendedGridFunction,
    FracLapOperator,
    FracParams,
    assemble_operator,
    closed_form_reference,
    eval_pointwise,
    normalization_constant,
)

__version__ = "0.1.0"

__all__ = [
    "Grid1D",
    "DistanceField",
    "CutoffEta",
    "DyadicPartition",
    "make_grid",
    "boundary_distance",
    "cutoff_eta",
    "dyadic_partition",
    "FracParams",
    "ExtendedGridFunction",
    "FracLapOperator",
    "normalization_constant",
    "eval_pointwise",
    "assemble_operator",
    "closed_form_reference",
    "__version__",
]
