"""Figure rendering for the CLI report path.

Each renderer writes one PNG next to the delimited output: eigenvalue
clouds over their domain, domain boundaries against the unit circle,
the circle density, and scalar-field heatmaps.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_cloud",
    "plot_boundary",
    "plot_density",
    "plot_field",
]

_CIRCLE_T = np.linspace(0, 2 * np.pi, 512)


def _draw_loops(ax, polyline, color="crimson", lw=1.4):
    for loop in polyline.loops:
        closed = np.append(loop, loop[0])
        ax.plot(closed.real, closed.imag, color=color, lw=lw, zorder=3)


def _draw_unit_circle(ax):
    ax.plot(np.cos(_CIRCLE_T), np.sin(_CIRCLE_T), "--", color="gray", lw=0.8, zorder=2)


def plot_cloud(clouds, polyline, path, title=None):
    """Eigenvalue scatter over the traced domain boundary."""
    fig, ax = plt.subplots(figsize=(6, 6))
    for cloud in clouds:
        ax.scatter(
            cloud.values.real, cloud.values.imag, s=4, alpha=0.5, color="steelblue", lw=0
        )
    if polyline is not None:
        _draw_loops(ax, polyline)
    _draw_unit_circle(ax)
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_boundary(polyline, path, title=None):
    """Domain boundary with the unit circle dashed for comparison."""
    fig, ax = plt.subplots(figsize=(6, 6))
    _draw_loops(ax, polyline)
    _draw_unit_circle(ax)
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_density(grid, path, title=None):
    """Circle density against the angle, with the support arc marked."""
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(grid.thetas, grid.density, color="steelblue", lw=1.4)
    if not grid.support.full_circle:
        for sign in (-1, 1):
            ax.axvline(sign * grid.support.theta_max, color="crimson", ls=":", lw=1.0)
    ax.set_xlabel("angle")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_field(fld, path, polyline=None, title=None):
    """Heatmap of a scalar field, optionally with a domain overlay."""
    fig, ax = plt.subplots(figsize=(6.4, 6))
    xs, ys = fld.grid.axes()
    vals = np.array(fld.values, dtype=float)
    if fld.mask is not None:
        vals = np.where(fld.mask, np.nan, vals)
    pm = ax.pcolormesh(xs, ys, vals, shading="auto", cmap="viridis")
    fig.colorbar(pm, ax=ax, shrink=0.85)
    if polyline is not None:
        _draw_loops(ax, polyline, color="white", lw=1.0)
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
