"""Static SVG figures rendered with matplotlib's object API (no display)."""

from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure


def _save(fig: Figure, path) -> None:
    FigureCanvasSVG(fig)
    fig.savefig(path, format="svg")


def plot_time_series(path, times, series: dict[str, np.ndarray], title: str = "") -> None:
    """Line plot of several measures against omega1 t."""
    fig = Figure(figsize=(6.0, 4.0), layout="constrained")
    ax = fig.add_subplot()
    for label, y in series.items():
        ax.plot(times, y, label=label)
    ax.set_xlabel(r"$\omega_1 t$")
    ax.legend()
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_curve(path, phi, s_r, title: str = "") -> None:
    fig = Figure(figsize=(6.0, 4.0), layout="constrained")
    ax = fig.add_subplot()
    ax.plot(phi, s_r)
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xlabel(r"$\phi$")
    ax.set_ylabel(r"$S_r(\phi)$")
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_heatmaps(path, deltas, lams, panels: dict[str, np.ndarray]) -> None:
    """One heatmap per panel over (delta, lambda), each with its own colour bar."""
    fig = Figure(figsize=(5.0 * len(panels), 4.0), layout="constrained")
    axes = fig.subplots(1, len(panels), squeeze=False)[0]
    for ax, (label, z) in zip(axes, panels.items()):
        mesh = ax.pcolormesh(deltas, lams, np.asarray(z, dtype=float).T, shading="nearest")
        fig.colorbar(mesh, ax=ax)
        ax.set_xlabel(r"$\Delta/\omega_1$")
        ax.set_ylabel(r"$\lambda/\omega_1$")
        ax.set_title(label)
    _save(fig, path)
