import time

import numpy as np
import pytest

from cdrosen import core_model as cm
from cdrosen.core_model import ProblemConfig
from cdrosen.parallel_eval import ChunkPlan, evaluators, parallel_dual, parallel_primal


def rel(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))


def test_plan_covers_every_term_once():
    plan = ChunkPlan(7, 100)
    idx = np.concatenate([plan.indices(w) for w in range(7)])
    np.testing.assert_array_equal(np.sort(idx), np.arange(100))
    np.testing.assert_array_equal(plan.indices(2)[:3], [2, 9, 16])


def test_more_workers_than_terms():
    c = ProblemConfig(3)
    plan = ChunkPlan.for_config(c, 32)
    x = np.array([0.5, -1.0, 2.0])
    assert rel(parallel_primal(c, x, plan), cm.primal_objective(c, x)) <= 1e-12


def test_plan_validation():
    with pytest.raises(ValueError):
        ChunkPlan(0, 10)
    with pytest.raises(ValueError):
        ChunkPlan(4, 0)
    with pytest.raises(cm.DimensionError):
        parallel_primal(ProblemConfig(5), np.ones(5), ChunkPlan(2, 3))


def test_single_worker_is_bit_identical(rng):
    for _ in range(20):
        c = ProblemConfig(int(rng.integers(2, 500)))
        x = rng.uniform(-3, 3, size=c.n)
        sigma = np.r_[rng.uniform(-0.9, 3, size=c.n_free), 0.0]
        plan = ChunkPlan.for_config(c, 1)
        assert parallel_primal(c, x, plan) == cm.primal_objective(c, x)
        assert parallel_dual(c, sigma, plan) == cm.dual_objective(c, sigma)


@pytest.mark.parametrize("workers", [1, 2, 3, 4, 7, 8, 16, 31, 32])
def test_matches_serial(rng, workers):
    for _ in range(10):
        c = ProblemConfig(int(rng.integers(2, 3000)))
        x = rng.uniform(-3, 3, size=c.n)
        sigma = np.r_[rng.uniform(-0.9, 3, size=c.n_free), 0.0]
        plan = ChunkPlan.for_config(c, workers)
        assert rel(parallel_primal(c, x, plan), cm.primal_objective(c, x)) <= 1e-12
        assert rel(parallel_dual(c, sigma, plan), cm.dual_objective(c, sigma)) <= 1e-12


def test_fixed_plan_is_deterministic(rng):
    c = ProblemConfig(2000)
    x = rng.uniform(-3, 3, size=c.n)
    plan = ChunkPlan.for_config(c, 8)
    values = {parallel_primal(c, x, plan) for _ in range(20)}
    assert len(values) == 1


def test_dual_pole_raises():
    c = ProblemConfig(5)
    with pytest.raises(cm.PoleError):
        parallel_dual(c, [0.0, -1.0, 0.0, 0.0], ChunkPlan.for_config(c, 2))


def test_evaluators_signature():
    c = ProblemConfig(10)
    primal, dual = evaluators(4)
    assert primal(c, np.ones(10)) == 0.0
    assert dual(c, np.zeros(9)) == 0.0
    assert evaluators(1) == (cm.primal_objective, cm.dual_objective)


def test_million_variable_primal_is_fast():
    c = ProblemConfig(1_000_000)
    x = np.full(c.n, 1.5)
    plan = ChunkPlan.for_config(c, 8)
    t0 = time.perf_counter()
    value = parallel_primal(c, x, plan)
    assert time.perf_counter() - t0 < 5.0
    assert rel(value, cm.primal_objective(c, x)) <= 1e-12
