"""Transition-matrix oracles and synthetic chains for calibrating the action.

Two controls bracket the signal: a transition matrix built from a base
distribution by the Metropolis rule, which satisfies detailed balance
exactly (minimized action at machine-precision scale), and a fully random
matrix, which does not (minimized action of order 0.2). A Markov-chain
simulator produces return series whose empirical transitions approach the
exact-balance case as the sample grows.
"""

from __future__ import annotations

import numpy as np

from . import _kernel
from .errors import InputError
from .grid import BinGrid, TransitionMatrix, KIND_DENSITY
from .series import ReturnsSeries

__all__ = [
    "FIXTURE_NAMES",
    "base_fixture",
    "metropolis_transition",
    "uniform_random_transition",
    "simulate_chain",
]

FIXTURE_NAMES = ("uniform", "two_point", "fat_tail")


def base_fixture(name: str, grid: BinGrid | None = None) -> np.ndarray:
    """Named strictly positive base distribution on the grid's bins.

    ``uniform``: equal weights. ``two_point``: two unequal spikes at the
    quarter points over a small uniform background. ``fat_tail``: discretized
    two-sided exponential-power shape (sharp peak, slowly decaying tails).
    """
    grid = grid if grid is not None else BinGrid()
    n = grid.bins
    if name == "uniform":
        w = np.full(n, 1.0 / n)
    elif name == "two_point":
        w = np.full(n, 0.10 / n)
        w[n // 4] += 0.55
        w[(3 * n) // 4] += 0.35
    elif name == "fat_tail":
        scale = 0.1 * (grid.upper - grid.lower)
        w = np.exp(-np.abs(grid.centers() / scale) ** 0.6)
    else:
        raise InputError(
            f"unknown base fixture {name!r}; available: {', '.join(FIXTURE_NAMES)}"
        )
    return w / w.sum()


def _positive_base(base) -> np.ndarray:
    b = np.asarray(base, dtype=float)
    if b.ndim != 1 or b.size < 2:
        raise ValueError("base distribution must be a 1-D vector of length >= 2")
    if not np.isfinite(b).all() or (b <= 0).any():
        raise ValueError("base distribution must be strictly positive and finite")
    return b


def metropolis_transition(base) -> TransitionMatrix:
    """Transition matrix W[x, y] = min(base[x] / base[y], 1).

    Satisfies detailed balance against ``base`` exactly: W[x, y] * base[y]
    and W[y, x] * base[x] both equal min(base[x], base[y]). The diagonal is
    identically 1.
    """
    b = _positive_base(base)
    values = np.minimum(b[:, None] / b[None, :], 1.0)
    return TransitionMatrix(values, KIND_DENSITY)


def uniform_random_transition(n: int, rng: np.random.Generator) -> TransitionMatrix:
    """Matrix of independent uniforms on (0, 1); deterministic per generator state."""
    if n < 2:
        raise ValueError("need at least 2 bins")
    values = rng.random((n, n))
    while True:
        zero = values == 0.0
        if not zero.any():
            break
        values[zero] = rng.random(int(zero.sum()))
    return TransitionMatrix(values, KIND_DENSITY)


def simulate_chain(base, grid: BinGrid, length: int,
                   rng: np.random.Generator) -> ReturnsSeries:
    """Markov chain of bin-center return values with stationary law ``base``.

    From current bin y, a proposal bin is drawn uniformly over all bins and
    accepted with probability min(base[x] / base[y], 1), otherwise the chain
    stays; the occupied bin's center is emitted each step. The start bin is
    drawn from ``base``. Draw order: start, then all proposals, then all
    acceptance uniforms (one per step, always consumed).
    """
    b = _positive_base(base)
    if b.size != grid.bins:
        raise ValueError("base distribution length must match the grid bin count")
    if length < 2:
        raise InputError("series too short: need length >= 2")
    b = b / b.sum()
    start = int(rng.choice(b.size, p=b))
    proposals = rng.integers(0, b.size, size=length)
    uniforms = rng.random(length)
    indices = _kernel.metropolis_walk(b, start, proposals, uniforms)
    return ReturnsSeries(grid.centers()[indices])
