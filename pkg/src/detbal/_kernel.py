"""Hot loops, compiled with numba when available.

The pure-Python fallbacks execute the identical statements, so results are
bit-for-bit the same either way; only speed differs. All kernels consume
pre-drawn uniforms so that random-number usage is fixed by the caller.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def decorate(func):
            return func

        return decorate


@njit(cache=True, nogil=True)
def full_terms(W, w, A, T2, contrib):
    """Rebuild the pair-term cache for configuration w.

    Fills A[x, y] = W[x, y] * w[y], the symmetric squared-term matrix T2 and
    the contributing-pair mask, and returns (sum of squared terms over pairs
    x < y, number of contributing pairs).
    """
    n = w.shape[0]
    for x in range(n):
        for y in range(n):
            A[x, y] = W[x, y] * w[y]
    total = 0.0
    npairs = 0
    for x in range(n):
        T2[x, x] = 0.0
        contrib[x, x] = False
        for y in range(x + 1, n):
            a = A[x, y]
            b = A[y, x]
            den = a + b
            if den > 0.0:
                t = (a - b) / den
                t2 = t * t
                T2[x, y] = t2
                T2[y, x] = t2
                contrib[x, y] = True
                contrib[y, x] = True
                total += t2
                npairs += 1
            else:
                T2[x, y] = 0.0
                T2[y, x] = 0.0
                contrib[x, y] = False
                contrib[y, x] = False
    return total, npairs


@njit(cache=True, nogil=True)
def run_sweeps(W, w, A, T2, contrib, total, npairs, beta, epsilon, tdraw, udraw):
    """Metropolis sweeps over all components, one temperature block.

    For sweep s and component x, tdraw[s, x] maps to the multiplicative
    step t = 2*tdraw - 1 and udraw[s, x] is the acceptance uniform (always
    consumed). The configuration is renormalized to unit sum at the end of
    every sweep, which leaves all pair terms unchanged (the action is scale
    invariant in w). Updates w, A, T2, contrib in place; returns the updated
    (total, npairs, accepted count).
    """
    n = w.shape[0]
    nsweeps = tdraw.shape[0]
    accepted = 0
    new_t2 = np.empty(n)
    new_c = np.empty(n, dtype=np.bool_)
    for s in range(nsweeps):
        for x in range(n):
            t = 2.0 * tdraw[s, x] - 1.0
            proposal = w[x] * (1.0 + t * epsilon)
            old_row = 0.0
            old_k = 0
            new_row = 0.0
            new_k = 0
            for y in range(n):
                if y == x:
                    continue
                old_row += T2[x, y]
                if contrib[x, y]:
                    old_k += 1
                a = A[x, y]
                b = W[y, x] * proposal
                den = a + b
                if den > 0.0:
                    tt = (a - b) / den
                    t2 = tt * tt
                    new_t2[y] = t2
                    new_c[y] = True
                    new_row += t2
                    new_k += 1
                else:
                    new_t2[y] = 0.0
                    new_c[y] = False
            s_old = total / npairs if npairs > 0 else 0.0
            total_new = total - old_row + new_row
            npairs_new = npairs - old_k + new_k
            s_new = total_new / npairs_new if npairs_new > 0 else 0.0
            delta = s_new - s_old
            if delta <= 0.0 or udraw[s, x] < np.exp(-beta * delta):
                w[x] = proposal
                total = total_new
                npairs = npairs_new
                for y in range(n):
                    if y == x:
                        continue
                    A[y, x] = W[y, x] * proposal
                    T2[x, y] = new_t2[y]
                    T2[y, x] = new_t2[y]
                    contrib[x, y] = new_c[y]
                    contrib[y, x] = new_c[y]
                accepted += 1
        norm = 0.0
        for x in range(n):
            norm += w[x]
        inv = 1.0 / norm
        for x in range(n):
            w[x] *= inv
        for x in range(n):
            for y in range(n):
                A[x, y] *= inv
    return total, npairs, accepted


@njit(cache=True, nogil=True)
def metropolis_walk(base, start, proposals, uniforms):
    """Uniform-proposal Metropolis walk over bins targeting ``base``.

    From current bin y, proposal bin p is accepted with probability
    min(base[p] / base[y], 1); the acceptance uniform is consumed for every
    step. Emits the occupied bin after each step.
    """
    steps = proposals.shape[0]
    out = np.empty(steps, dtype=np.int64)
    current = start
    for i in range(steps):
        p = proposals[i]
        if base[p] >= base[current] or uniforms[i] < base[p] / base[current]:
            current = p
        out[i] = current
    return out
