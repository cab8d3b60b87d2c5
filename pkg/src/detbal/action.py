"""The detailed-balance action functional and its incremental evaluation.

For a transition matrix W and weight vector w, every unordered bin pair
x < y contributes the squared relative balance violation

    ((a - b) / (a + b))**2,   a = W[x, y] * w[y],   b = W[y, x] * w[x],

provided a + b > 0; pairs with a + b = 0 satisfy balance trivially and are
skipped. The action is the mean over contributing pairs, so it always lies
in [0, 1]: 0 means exact detailed balance, 1 maximal violation. Diagonal
entries never contribute (the pair range is strictly x < y).

The value is invariant under rescaling w by any positive factor and under
column normalization of W combined with the matching reweighting of w,
which is what the annealer exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernel

__all__ = [
    "ActionValue",
    "ActionCache",
    "StaleCacheError",
    "action",
    "action_delta",
    "balance_residuals",
    "fixed_point_residual",
]


class StaleCacheError(RuntimeError):
    """The cache no longer corresponds to the (matrix, weights) pair."""


@dataclass(frozen=True)
class ActionValue:
    """Action value with the number of contributing pairs.

    ``degenerate`` flags the K = 0 case (no pair carries any mass), where
    the action is defined as 0: balance holds trivially.
    """

    s: float
    k_terms: int
    degenerate: bool = False


def _matrix_values(transitions) -> np.ndarray:
    values = getattr(transitions, "values", transitions)
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError("transition matrix must be square")
    return values


def _check_pair(values: np.ndarray, weights) -> tuple[np.ndarray, np.ndarray]:
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or weights.size != values.shape[0]:
        raise ValueError(
            f"dimension mismatch: matrix is {values.shape[0]}x{values.shape[0]}, "
            f"weights have length {weights.size}"
        )
    if (values < 0).any():
        raise ValueError("transition matrix entries must be nonnegative")
    if (weights < 0).any():
        raise ValueError("weights must be nonnegative")
    return values, weights


def action(transitions, weights) -> ActionValue:
    """Evaluate the detailed-balance action for (transitions, weights)."""
    values, weights = _check_pair(_matrix_values(transitions), weights)
    products = values * weights  # [x, y] = W[x, y] * w[y]
    numer = products - products.T
    denom = products + products.T
    iu = np.triu_indices(values.shape[0], k=1)
    den = denom[iu]
    mask = den > 0
    k = int(np.count_nonzero(mask))
    if k == 0:
        return ActionValue(0.0, 0, degenerate=True)
    ratios = numer[iu][mask] / den[mask]
    return ActionValue(float(ratios @ ratios / k), k)


def balance_residuals(transitions, weights) -> np.ndarray:
    """Antisymmetric matrix of relative balance violations per bin pair.

    Entry [x, y] is (a - b) / (a + b) with a, b as in :func:`action`, and 0
    wherever a + b = 0.
    """
    values, weights = _check_pair(_matrix_values(transitions), weights)
    products = values * weights
    numer = products - products.T
    denom = products + products.T
    residuals = np.zeros_like(values)
    mask = denom > 0
    residuals[mask] = numer[mask] / denom[mask]
    return residuals


def fixed_point_residual(stochastic, weights) -> float:
    """Max-norm deviation of weights from being a fixed point of the matrix.

    For a column-stochastic matrix M, a stationary weight vector satisfies
    w[y] = sum_x M[y, x] w[x]; this returns max |w - M w|.
    """
    values = _matrix_values(stochastic)
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or weights.size != values.shape[0]:
        raise ValueError("dimension mismatch between matrix and weights")
    return float(np.max(np.abs(weights - values @ weights)))


class ActionCache:
    """Pair-term cache for O(N) action updates under single-component edits.

    Owns a private copy of the matrix and the current weights together with
    the per-pair products and squared terms. A cache belongs to exactly one
    annealing chain; it is mutable single-owner state and must not be shared.
    """

    def __init__(self, transitions, weights):
        values, weights = _check_pair(_matrix_values(transitions), weights)
        n = values.shape[0]
        self._W = values.copy()
        self._w = weights.copy()
        self._A = np.empty((n, n))
        self._T2 = np.empty((n, n))
        self._contrib = np.empty((n, n), dtype=bool)
        self._total, self._k = _kernel.full_terms(
            self._W, self._w, self._A, self._T2, self._contrib
        )

    @property
    def size(self) -> int:
        return self._w.size

    @property
    def weights(self) -> np.ndarray:
        """Current configuration (view; do not mutate)."""
        return self._w

    @property
    def value(self) -> ActionValue:
        if self._k == 0:
            return ActionValue(0.0, 0, degenerate=True)
        return ActionValue(float(self._total / self._k), self._k)

    def matches(self, transitions, weights) -> bool:
        values = _matrix_values(transitions)
        weights = np.asarray(weights, dtype=float)
        return np.array_equal(self._W, values) and np.array_equal(self._w, weights)

    def _row_terms(self, index: int, new_weight: float):
        a = self._A[index, :]
        b = self._W[:, index] * new_weight
        denom = a + b
        mask = denom > 0
        mask[index] = False
        t2_row = np.zeros(self._w.size)
        ratios = (a[mask] - b[mask]) / denom[mask]
        t2_row[mask] = ratios * ratios
        return t2_row, mask

    def evaluate(self, index: int, new_weight: float) -> ActionValue:
        """Action value after replacing weights[index] by new_weight.

        Touches only the <= N-1 pairs involving ``index``; does not commit.
        """
        if not (0 <= index < self._w.size):
            raise IndexError(f"component index {index} out of range")
        if not (math.isfinite(new_weight) and new_weight >= 0):
            raise ValueError("new weight must be nonnegative and finite")
        t2_row, mask = self._row_terms(index, new_weight)
        total = self._total - self._T2[index].sum() + t2_row.sum()
        k = self._k - int(self._contrib[index].sum()) + int(mask.sum())
        if k == 0:
            return ActionValue(0.0, 0, degenerate=True)
        return ActionValue(float(total / k), k)

    def commit(self, index: int, new_weight: float) -> None:
        """Apply a single-component edit and update all cached terms."""
        t2_row, mask = self._row_terms(index, new_weight)
        self._total += t2_row.sum() - self._T2[index].sum()
        self._k += int(mask.sum()) - int(self._contrib[index].sum())
        self._w[index] = new_weight
        self._A[:, index] = self._W[:, index] * new_weight
        self._T2[index, :] = t2_row
        self._T2[:, index] = t2_row
        self._contrib[index, :] = mask
        self._contrib[:, index] = mask

    def run_sweeps(self, beta: float, epsilon: float, tdraw: np.ndarray,
                   udraw: np.ndarray) -> int:
        """Run Metropolis sweeps on the cached state; returns accepted count.

        tdraw and udraw are (sweeps, N) uniforms in [0, 1); see
        :func:`detbal._kernel.run_sweeps` for their exact roles.
        """
        self._total, self._k, accepted = _kernel.run_sweeps(
            self._W, self._w, self._A, self._T2, self._contrib,
            self._total, self._k, float(beta), float(epsilon), tdraw, udraw,
        )
        return int(accepted)

    def refresh(self) -> None:
        """Recompute all terms from scratch, discarding accumulated round-off."""
        self._total, self._k = _kernel.full_terms(
            self._W, self._w, self._A, self._T2, self._contrib
        )


def action_delta(transitions, weights, index: int, new_weight: float,
                 cache: ActionCache) -> ActionValue:
    """Incremental action after a single-component edit, via a pair cache.

    Equals ``action`` on the edited configuration to within accumulated
    round-off (1e-10 in practice). The cache must have been built from
    exactly the given (transitions, weights); otherwise a
    :class:`StaleCacheError` is raised.
    """
    if not cache.matches(transitions, weights):
        raise StaleCacheError(
            "cache does not match the supplied transitions/weights"
        )
    return cache.evaluate(index, new_weight)
