"""Matplotlib figure rendering for the report path.

Figures are written next to the delimited output of each experiment; they are
a convenience view of the same data and never feed back into verdicts.
matplotlib is imported lazily so headless report-only runs stay light.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "render_profile",
    "render_phase_diagram",
    "render_rate_fit",
    "render_ladder",
]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: str):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    _pyplot().close(fig)


def render_profile(path: str, x, u, v=None, title: str = "solution profile"):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(x, u, lw=1.2, label="u")
    if v is not None:
        ax.plot(x, v, lw=1.0, ls="--", label="homogenized v")
    ax.set_xlabel("x")
    ax.set_ylabel("value")
    ax.set_title(title)
    ax.legend(frameon=False)
    _save(fig, path)


def render_phase_diagram(path: str, cells: list[dict]):
    """cells: dicts with sigma, p, classification, gap (finest)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.6, 4.6))
    colors = {"ATTAINS": "tab:blue", "GAP": "tab:red", "UNRESOLVED": "tab:gray",
              "ERROR": "k"}
    for c in cells:
        ax.scatter(c["sigma"], c["p"], s=180, marker="s",
                   color=colors.get(c["classification"], "k"), alpha=0.85)
    sig = np.linspace(min(c["sigma"] for c in cells) - 0.05,
                      max(c["sigma"] for c in cells) + 0.05, 200)
    ax.plot(sig, 1.0 / sig, "k--", lw=1.0, label="sigma * p = 1")
    handles = [plt.Line2D([], [], marker="s", ls="", color=v, label=k)
               for k, v in colors.items() if any(c["classification"] == k for c in cells)]
    handles.append(plt.Line2D([], [], ls="--", color="k", label="sigma*p = 1"))
    ax.legend(handles=handles, frameon=False, fontsize=8)
    ax.set_xlabel("sigma")
    ax.set_ylabel("p")
    ax.set_ylim(min(c["p"] for c in cells) - 0.2, max(c["p"] for c in cells) + 0.2)
    ax.set_title("boundary attainment phase diagram")
    _save(fig, path)


def render_rate_fit(path: str, delta, vals, slope: float | None, window,
                    title: str = "boundary rate fit"):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    keep = np.abs(vals) > 0
    ax.loglog(delta[keep], np.abs(vals[keep]), ".", ms=3, label="|values|")
    if slope is not None:
        lo, hi = window
        mask = (delta >= lo) & (delta <= hi) & keep
        if mask.any():
            d0 = np.exp(np.mean(np.log(delta[mask])))
            v0 = np.exp(np.mean(np.log(np.abs(vals[mask]))))
            dd = np.array([lo, hi])
            ax.loglog(dd, v0 * (dd / d0) ** slope, "r-", lw=1.2,
                      label=f"fit slope {slope:.3f}")
        ax.axvspan(lo, hi, color="0.9", zorder=0)
    ax.set_xlabel("distance to boundary")
    ax.set_ylabel("magnitude")
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)


def render_ladder(path: str, x, profiles: list, labels: list[str],
                  title: str = "monotone data ladder"):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for u, lab in zip(profiles, labels):
        ax.plot(x, u, lw=1.0, label=lab)
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=8, ncol=2)
    _save(fig, path)
