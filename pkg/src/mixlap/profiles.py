"""Named data profiles used by experiment configs.

Source profiles describe the smooth factor f_tilde of f = delta^(alpha-2) *
f_tilde; "delta_power" sets (alpha, kappa) directly.  Exterior profiles fill
the exterior samples and the far-field constant.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .domain import Grid1D
from .errors import ConfigError
from .solver import SingularSource

__all__ = ["source_from_config", "exterior_from_config", "bump"]


def bump(x: NDArray, a: float, b: float) -> NDArray:
    """Compactly supported C^inf bump on (a, b), peak value 1 at the center."""
    s = (2.0 * x - (a + b)) / (b - a)
    out = np.zeros_like(np.asarray(x, dtype=float))
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def source_from_config(grid: Grid1D, cfg: dict | str | None) -> SingularSource | None:
    """Build the source from {"profile": name, ...} or a bare profile name.

    Profiles: zero | one | const (value) | bump (amplitude) |
    delta_power (alpha, kappa).
    """
    if cfg is None:
        return None
    if isinstance(cfg, str):
        cfg = {"profile": cfg}
    name = cfg.get("profile", "zero")
    if name == "zero":
        return None
    if name == "one":
        return SingularSource(alpha=2.0, smooth_part=1.0)
    if name == "const":
        return SingularSource(alpha=2.0, smooth_part=float(cfg.get("value", 1.0)))
    if name == "bump":
        amp = float(cfg.get("amplitude", 1.0))
        return SingularSource(alpha=2.0, smooth_part=amp * bump(grid.nodes, grid.a, grid.b))
    if name == "delta_power":
        alpha = float(cfg.get("alpha", 1.0))
        kappa = float(cfg.get("kappa", 1.0))
        return SingularSource(alpha=alpha, smooth_part=kappa)
    raise ConfigError(f"unknown source profile {name!r}")


def exterior_from_config(grid: Grid1D, cfg: dict | str | None) -> tuple[NDArray, float]:
    """Exterior samples on grid.ext_nodes plus the far-field constant."""
    if cfg is None:
        cfg = {"profile": "zero"}
    if isinstance(cfg, str):
        cfg = {"profile": cfg}
    name = cfg.get("profile", "zero")
    if name == "zero":
        return np.zeros(len(grid.ext_nodes)), 0.0
    if name == "const":
        val = float(cfg.get("value", 0.0))
        return np.full(len(grid.ext_nodes), val), val
    raise ConfigError(f"unknown exterior profile {name!r}")
