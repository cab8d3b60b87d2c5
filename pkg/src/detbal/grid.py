"""Return-value binning and empirical transition counting.

Transition matrices follow the column convention W[x, y] where y is the
source bin (return at step i) and x the destination bin (return at step
i+1), so that column sums count all departures from a bin.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import InputError
from .series import ReturnsSeries

__all__ = [
    "BinGrid",
    "TransitionMatrix",
    "ColumnNormalized",
    "bin_index",
    "build_transitions",
    "column_normalize",
    "marginal_histogram",
]

KIND_COUNTS = "counts"
KIND_DENSITY = "density"


@dataclass(frozen=True)
class BinGrid:
    """Uniform binning of the return axis into ``bins`` half-open intervals.

    Bin k (0-based, k = 0 .. bins-1) covers [lower + k*width, lower +
    (k+1)*width); the global upper edge is exclusive, so values equal to
    ``upper`` fall outside the grid.
    """

    lower: float = -0.02
    upper: float = 0.02
    bins: int = 25

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise ValueError("grid bounds must be finite")
        if not self.lower < self.upper:
            raise ValueError("grid requires lower < upper")
        if int(self.bins) != self.bins or self.bins < 2:
            raise ValueError("grid requires an integer bin count >= 2")
        object.__setattr__(self, "bins", int(self.bins))

    @property
    def width(self) -> float:
        return (self.upper - self.lower) / self.bins

    def edges(self) -> np.ndarray:
        return self.lower + self.width * np.arange(self.bins + 1)

    def centers(self) -> np.ndarray:
        return self.lower + self.width * (np.arange(self.bins) + 0.5)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Square nonnegative matrix of transition counts or densities.

    Entry [x, y] refers to destination bin x given source bin y.
    """

    values: np.ndarray
    kind: str = KIND_COUNTS

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError("transition matrix must be square")
        if not np.isfinite(values).all():
            raise ValueError("transition matrix entries must be finite")
        if (values < 0).any():
            raise ValueError("transition matrix entries must be nonnegative")
        if self.kind not in (KIND_COUNTS, KIND_DENSITY):
            raise ValueError(f"unknown matrix kind {self.kind!r}")
        object.__setattr__(self, "values", values)

    @property
    def bins(self) -> int:
        return int(self.values.shape[0])


class ColumnNormalized(NamedTuple):
    matrix: TransitionMatrix
    column_sums: np.ndarray
    empty_columns: np.ndarray


def bin_index(value: float, grid: BinGrid) -> Optional[int]:
    """0-based bin index of a return value, or None if outside the grid.

    Bin boundaries are the canonical ``grid.edges()`` values, so a value
    equal to a computed edge always lands in the bin to its right.
    """
    if not (grid.lower <= value < grid.upper):
        return None
    k = int(np.searchsorted(grid.edges(), value, side="right")) - 1
    return min(max(k, 0), grid.bins - 1)


def _bin_indices(values: np.ndarray, grid: BinGrid) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized bin_index: (indices, in-range mask); indices valid where masked."""
    in_range = (values >= grid.lower) & (values < grid.upper)
    raw = np.searchsorted(grid.edges(), values, side="right") - 1
    idx = np.clip(raw, 0, grid.bins - 1).astype(np.int64)
    idx[~in_range] = 0
    return idx, in_range


def build_transitions(returns: ReturnsSeries, grid: BinGrid) -> tuple[TransitionMatrix, int]:
    """Count consecutive-pair transitions (r[i] -> r[i+1]) on the grid.

    Each of the m-1 overlapping pairs increments W[x, y] when both members
    are in range (y from r[i], x from r[i+1]); otherwise the pair counts as
    dropped. Returns the count matrix and the dropped-pair count, so that
    total counts + dropped == m - 1.
    """
    values = returns.values
    if values.size < 2:
        raise InputError("need at least 2 return events to form transition pairs")
    idx, in_range = _bin_indices(values, grid)
    source = idx[:-1]
    dest = idx[1:]
    good = in_range[:-1] & in_range[1:]
    counts = np.zeros((grid.bins, grid.bins))
    np.add.at(counts, (dest[good], source[good]), 1.0)
    dropped = int(np.count_nonzero(~good))
    return TransitionMatrix(counts, KIND_COUNTS), dropped


def column_normalize(matrix: TransitionMatrix) -> ColumnNormalized:
    """Rescale every column to unit sum.

    Each column y of the result sums to 1 when the input column carries any
    mass; columns with zero sum stay all-zero and are reported in
    ``empty_columns``. The column sums are returned so callers can map
    weights between the raw and normalized conventions.
    """
    values = matrix.values
    sums = values.sum(axis=0)
    nonzero = sums > 0
    normalized = np.zeros_like(values)
    normalized[:, nonzero] = values[:, nonzero] / sums[nonzero]
    return ColumnNormalized(
        TransitionMatrix(normalized, KIND_DENSITY),
        sums,
        np.flatnonzero(~nonzero),
    )


def marginal_histogram(returns: ReturnsSeries, grid: BinGrid) -> np.ndarray:
    """Distribution of return events over bins, normalized over in-range events."""
    values = returns.values
    idx, in_range = _bin_indices(values, grid)
    if not in_range.any():
        raise InputError("all return events fall outside the grid range")
    counts = np.bincount(idx[in_range], minlength=grid.bins).astype(float)
    return counts / counts.sum()
