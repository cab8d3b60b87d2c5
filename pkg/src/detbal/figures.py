"""Render run artifacts to PNG files (file output only, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .grid import BinGrid

__all__ = [
    "save_price_figure",
    "save_returns_figure",
    "save_transition_figure",
    "save_history_figure",
    "save_distribution_figure",
    "save_residual_figure",
]

_FIGSIZE = (6.4, 4.4)
_DPI = 150


def _finish(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return Path(path)


def save_price_figure(quotes: np.ndarray, path) -> Path:
    """Relative price p/p(0) against the quote counter."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(quotes / quotes[0], lw=0.6)
    ax.set_xlabel("quote counter i")
    ax.set_ylabel("p(i) / p(0)")
    return _finish(fig, path)


def save_returns_figure(values: np.ndarray, path) -> Path:
    """Log-returns against the quote counter."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(values, lw=0.4)
    ax.set_xlabel("quote counter i")
    ax.set_ylabel("return r(i)")
    return _finish(fig, path)


def save_transition_figure(values: np.ndarray, grid: BinGrid, path,
                           kind: str = "counts") -> Path:
    """Heatmap of the transition matrix on the return grid (log1p scale)."""
    fig, ax = plt.subplots(figsize=(5.6, 5.0))
    extent = (grid.lower, grid.upper, grid.lower, grid.upper)
    img = ax.imshow(np.log10(values + 1.0), origin="lower", extent=extent,
                    aspect="equal", cmap="viridis")
    fig.colorbar(img, ax=ax, label=f"log10(1 + {kind})")
    ax.set_xlabel("source return r(i)")
    ax.set_ylabel("destination return r(i+1)")
    return _finish(fig, path)


def save_history_figure(histories: list[np.ndarray], path, title: str = "") -> Path:
    """Annealing histories: action versus inverse temperature, log-log."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for k, hist in enumerate(histories):
        ax.loglog(hist[:, 0], np.maximum(hist[:, 1], 1e-300),
                  lw=0.8, label=f"chain {k}" if len(histories) <= 6 else None)
    ax.set_xlabel("inverse temperature beta")
    ax.set_ylabel("action S")
    if title:
        ax.set_title(title)
    if len(histories) <= 6:
        ax.legend(fontsize="small")
    return _finish(fig, path)


def save_distribution_figure(grid: BinGrid, curves, path) -> Path:
    """Overlay of bin distributions; curves are (label, weights, stderr|None)."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    centers = grid.centers()
    markers = ("o", "x", "s", "^")
    for i, (label, weights, stderr) in enumerate(curves):
        floor = np.maximum(weights, 1e-300)
        ax.semilogy(centers, floor, drawstyle="steps-mid", lw=0.9,
                    marker=markers[i % len(markers)], ms=4, label=label)
        if stderr is not None and np.any(stderr > 0):
            ax.errorbar(centers, floor, yerr=stderr, fmt="none",
                        elinewidth=0.7, capsize=2)
    ax.set_xlabel("return r")
    ax.set_ylabel("weight w(r)")
    ax.legend(fontsize="small")
    return _finish(fig, path)


def save_residual_figure(residuals: np.ndarray, grid: BinGrid, path) -> Path:
    """Antisymmetric balance residuals per bin pair, diverging colormap."""
    fig, ax = plt.subplots(figsize=(5.6, 5.0))
    extent = (grid.lower, grid.upper, grid.lower, grid.upper)
    limit = float(np.max(np.abs(residuals))) or 1.0
    img = ax.imshow(residuals, origin="lower", extent=extent, aspect="equal",
                    cmap="RdBu_r", vmin=-limit, vmax=limit)
    fig.colorbar(img, ax=ax, label="relative balance violation")
    ax.set_xlabel("source return r(i)")
    ax.set_ylabel("destination return r(i+1)")
    return _finish(fig, path)
