"""Figure rendering for the CLI report paths.

Every figure is derived from a delimited table that the CLI has already
written; the CSV stays the machine-readable contract and these PNGs are a
convenience view of the same numbers.  The Agg backend is forced so the
renderers work in headless runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "render_cj_figure",
    "render_prior_figure",
    "render_density_figure",
    "render_trace_figure",
]

_DPI = 120


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_cj_figure(p_grid, cj_values, path, ag=None):
    """Asymmetry curve CJ(p) against the relative density height p."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(p_grid, cj_values, lw=1.5)
    ax.axhline(0.0, color="0.6", lw=0.8, ls=":")
    if ag is not None:
        ax.axhline(ag, color="C3", lw=0.8, ls="--", label=f"AG = {ag:.3f}")
        ax.legend(frameon=False)
    ax.set_xlabel("relative density height p")
    ax.set_ylabel("CJ(p)")
    return _finish(fig, path)


def render_prior_figure(deltas, densities, path, kappa_lo=None, kappa_hi=None):
    """Induced shape prior density over delta, log-x axis."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(deltas, densities, lw=1.5)
    ax.set_xscale("log")
    ax.set_xlabel("delta")
    ax.set_ylabel("prior density")
    if kappa_lo is not None and kappa_hi is not None:
        ax.set_title(f"kappa range ({kappa_lo:.4f}, {kappa_hi:.4f})", fontsize=9)
    return _finish(fig, path)


def render_density_figure(grid, density, path, data=None, label="density"):
    """Fitted or predictive density on a grid, optionally over a data histogram."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if data is not None and len(data) > 0:
        ax.hist(np.asarray(data, float), bins="auto", density=True,
                color="0.85", edgecolor="0.7")
    ax.plot(grid, density, lw=1.5, label=label)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend(frameon=False)
    return _finish(fig, path)


def render_trace_figure(draws, param_names, path):
    """Stacked trace plots of the kept draws, one panel per parameter."""
    draws = np.atleast_2d(np.asarray(draws, float))
    p = draws.shape[1]
    fig, axes = plt.subplots(p, 1, figsize=(6, 1.4 * p + 0.8), sharex=True,
                             squeeze=False)
    for j in range(p):
        ax = axes[j, 0]
        ax.plot(draws[:, j], lw=0.4)
        ax.set_ylabel(param_names[j], fontsize=8)
    axes[-1, 0].set_xlabel("kept draw")
    return _finish(fig, path)
