"""Simulated annealing of the balance action over the probability simplex.

Every chain owns its configuration, cache and random generator, so chains
are independent and safe to run concurrently. Reproducibility contract:

* the generator is numpy's PCG64;
* chain k of a multi-start run is seeded with
  ``SeedSequence(entropy=master_seed, spawn_key=(*prefix, k))``;
* within a chain, each temperature step draws one (sweeps, N) block of
  step uniforms followed by one (sweeps, N) block of acceptance uniforms;
  both uniforms are consumed for every proposal, accepted or not.

Identical inputs and master seed therefore give bit-identical results
regardless of how many chains execute concurrently.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .action import ActionCache, ActionValue, action

__all__ = [
    "AnnealSchedule",
    "AnnealConfig",
    "AnnealResult",
    "AnnealAggregate",
    "make_schedule",
    "random_start",
    "sweep",
    "anneal_one",
    "anneal_multi",
]


@dataclass(frozen=True)
class AnnealSchedule:
    """Exponential cooling: beta(j) = beta_start * exp(rate * j), j = 0..steps."""

    beta_start: float = 1e-2
    beta_end: float = 1e10
    steps: int = 800

    def __post_init__(self):
        if not (0 < self.beta_start < self.beta_end):
            raise ValueError("schedule requires 0 < beta_start < beta_end")
        if self.steps < 1:
            raise ValueError("schedule requires at least 1 step")

    @property
    def rate(self) -> float:
        return math.log(self.beta_end / self.beta_start) / self.steps

    def betas(self) -> np.ndarray:
        """The steps+1 inverse temperatures, from beta_start to beta_end."""
        return self.beta_start * np.exp(self.rate * np.arange(self.steps + 1))


def make_schedule(beta_start: float, beta_end: float, steps: int) -> AnnealSchedule:
    """Build an exponential schedule from beta_start to beta_end in ``steps`` steps."""
    return AnnealSchedule(beta_start, beta_end, steps)


@dataclass(frozen=True)
class AnnealConfig:
    """Per-chain effort and multi-start settings."""

    sweeps: int = 1600
    epsilon: float = 0.001
    starts: int = 48
    seed: int = 0

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("need at least 1 sweep per temperature")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.starts < 1:
            raise ValueError("need at least 1 start")


@dataclass(frozen=True, eq=False)
class AnnealResult:
    """Outcome of one chain: final configuration, its action, and the
    (beta, action) history sampled once per temperature step."""

    weights: np.ndarray
    final: ActionValue
    history: np.ndarray
    seed: object


@dataclass(frozen=True, eq=False)
class AnnealAggregate:
    """Across-start summary: per-bin mean and standard error of the final
    weights, plus the best (minimum-action) chain."""

    mean_weights: np.ndarray
    stderr_weights: np.ndarray
    min_action: ActionValue
    best_chain: int


def random_start(n: int, rng: np.random.Generator) -> np.ndarray:
    """Strictly positive uniform random weights, normalized to unit sum."""
    if n < 2:
        raise ValueError("need at least 2 bins")
    w = rng.random(n)
    while True:
        zero = w == 0.0
        if not zero.any():
            break
        w[zero] = rng.random(int(zero.sum()))
    return w / w.sum()


def sweep(cache: ActionCache, beta: float, epsilon: float,
          rng: np.random.Generator) -> int:
    """One Metropolis pass over all components of the cached configuration.

    For each component x in order, proposes w[x] * (1 + t * epsilon) with t
    uniform in [-1, 1], accepts when the action does not increase and with
    probability exp(-beta * delta) otherwise, then renormalizes the
    configuration to unit sum at the end of the pass (a pure rescaling,
    which changes neither the action nor any later acceptance). Draws one
    length-N block of step uniforms, then one of acceptance uniforms.
    Returns the number of accepted proposals.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if not 0 <= epsilon < 1:
        raise ValueError("epsilon must lie in [0, 1)")
    n = cache.size
    tdraw = rng.random((1, n))
    udraw = rng.random((1, n))
    return cache.run_sweeps(beta, epsilon, tdraw, udraw)


def anneal_one(transitions, schedule: AnnealSchedule, config: AnnealConfig,
               seed=None, on_step=None) -> AnnealResult:
    """Run one annealing chain and return its result.

    Starts from ``random_start``, runs ``config.sweeps`` sweeps at each of
    the schedule's steps+1 temperatures, and records (beta, action) after
    each temperature. ``seed`` may be an int or a ``SeedSequence``; when
    omitted, ``config.seed`` is used. ``on_step(j, beta, cache)``, when
    given, is called after the sweeps at each temperature (used for
    instrumentation; the cache must not be mutated).

    The cached action is re-anchored against a full recomputation after
    every temperature step, which keeps it within 1e-10 of the exact value
    throughout.
    """
    if seed is None:
        seed = config.seed
    sequence = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.Generator(np.random.PCG64(sequence))

    cache = ActionCache(transitions, random_start(_size_of(transitions), rng))
    betas = schedule.betas()
    history = np.empty((betas.size, 2))
    for j, beta in enumerate(betas):
        tdraw = rng.random((config.sweeps, cache.size))
        udraw = rng.random((config.sweeps, cache.size))
        cache.run_sweeps(beta, config.epsilon, tdraw, udraw)
        history[j, 0] = beta
        history[j, 1] = cache.value.s
        if on_step is not None:
            on_step(j, beta, cache)
        cache.refresh()

    final_w = cache.weights.copy()
    return AnnealResult(final_w, action(transitions, final_w), history, seed)


def anneal_multi(transitions, schedule: AnnealSchedule, config: AnnealConfig,
                 jobs: int = 1, seed_prefix: tuple = ()) -> tuple[list[AnnealResult], AnnealAggregate]:
    """Run ``config.starts`` independent chains and aggregate their results.

    Chain k is seeded from ``SeedSequence(config.seed, spawn_key=(*seed_prefix,
    k))``. With jobs > 1 chains run on a thread pool (the sweep kernels
    release the GIL); results are always collected in chain order, so the
    aggregate does not depend on scheduling.
    """
    seeds = [
        np.random.SeedSequence(entropy=config.seed, spawn_key=(*seed_prefix, k))
        for k in range(config.starts)
    ]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(
                lambda s: anneal_one(transitions, schedule, config, seed=s),
                seeds,
            ))
    else:
        results = [anneal_one(transitions, schedule, config, seed=s) for s in seeds]

    finals = np.vstack([r.weights for r in results])
    mean = finals.mean(axis=0)
    if config.starts > 1:
        stderr = finals.std(axis=0, ddof=1) / math.sqrt(config.starts)
    else:
        stderr = np.zeros_like(mean)
    best = int(np.argmin([r.final.s for r in results]))
    return results, AnnealAggregate(mean, stderr, results[best].final, best)


def _size_of(transitions) -> int:
    values = getattr(transitions, "values", transitions)
    return int(np.asarray(values).shape[0])
