"""Partial-sum evaluation of the primal and dual objectives.

Both objectives are sums of ``n - 1`` local terms. A :class:`ChunkPlan`
deals the term indices round-robin to workers (worker ``w`` takes
``w, w + W, w + 2W, ...``), each worker sums its share, and the partials are
folded sequentially in worker order. A fixed plan therefore always gives the
same bits; different plans agree to rounding.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import core_model as cm

_pools: dict[int, ThreadPoolExecutor] = {}
_pools_lock = threading.Lock()


def _pool(workers: int) -> ThreadPoolExecutor:
    with _pools_lock:
        pool = _pools.get(workers)
        if pool is None:
            pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="cdrosen-sum")
            _pools[workers] = pool
        return pool


@dataclass(frozen=True)
class ChunkPlan:
    n_workers: int
    n_terms: int

    def __post_init__(self):
        if self.n_terms <= 0:
            raise ValueError("nothing to sum: n - 1 must be positive")
        if self.n_workers < 1:
            raise ValueError("n_workers must be at least 1")

    @classmethod
    def for_config(cls, config: cm.ProblemConfig, n_workers: int) -> "ChunkPlan":
        return cls(n_workers=n_workers, n_terms=config.n - 1)

    def indices(self, worker: int) -> np.ndarray:
        return np.arange(worker, self.n_terms, self.n_workers)

    def _check(self, config: cm.ProblemConfig):
        if self.n_terms != config.n - 1:
            raise cm.DimensionError(
                f"plan covers {self.n_terms} terms but the problem has {config.n - 1}"
            )


def _run(plan: ChunkPlan, partial) -> float:
    if plan.n_workers == 1:
        partials = [partial(0)]
    else:
        partials = list(_pool(plan.n_workers).map(partial, range(plan.n_workers)))
    total = 0.0
    for p in partials:
        total += p
    return total


def parallel_primal(config: cm.ProblemConfig, x, plan: ChunkPlan) -> float:
    plan._check(config)
    x = cm._vec(x, config.n, "x")
    lo, hi = x[:-1], x[1:]
    step = plan.n_workers

    def partial(w: int) -> float:
        return float(np.sum(cm.primal_terms(lo[w::step], hi[w::step], config.alpha)))

    return _run(plan, partial)


def parallel_dual(config: cm.ProblemConfig, sigma, plan: ChunkPlan) -> float:
    plan._check(config)
    sigma = cm._vec(sigma, config.n_dual, "sigma")
    cm._check_poles(sigma)
    prev = cm._shift_back(sigma)
    step = plan.n_workers

    def partial(w: int) -> float:
        return float(np.sum(cm.dual_terms(prev[w::step], sigma[w::step], config.alpha)))

    return float(config.n_dual - _run(plan, partial))


def evaluators(n_workers: int):
    """``(primal, dual)`` callables with the core-model signature, or the
    serial ones when ``n_workers == 1``."""
    if n_workers <= 1:
        return cm.primal_objective, cm.dual_objective

    def primal(config, x):
        return parallel_primal(config, x, ChunkPlan.for_config(config, n_workers))

    def dual(config, sigma):
        return parallel_dual(config, sigma, ChunkPlan.for_config(config, n_workers))

    return primal, dual
