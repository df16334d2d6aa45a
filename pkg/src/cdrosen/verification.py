"""Randomized checks of the duality identities, run by ``cdrosen verify``.

Every suite draws its own samples from a seeded generator and returns a
:class:`SuiteResult` counting how many samples satisfied the property.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import core_model as cm
from . import critical_points as cp
from . import parallel_eval as pe


@dataclass
class SuiteResult:
    name: str
    passed: int
    total: int
    worst: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.total > 0 and self.passed == self.total

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{status} {self.name:<14} {self.passed}/{self.total}  worst={self.worst:.3e}"


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


def _tally(name, values, bound) -> SuiteResult:
    values = np.asarray(values, dtype=float)
    ok = values <= bound
    res = SuiteResult(name, int(ok.sum()), int(values.size), float(values.max(initial=0.0)))
    res.failures = [int(i) for i in np.flatnonzero(~ok)[:10]]
    return res


def _dims(rng, samples, lo=2, hi=30):
    return rng.integers(lo, hi + 1, size=samples)


def sample_s_plus(rng, config: cm.ProblemConfig, lower: float = -0.99, upper: float = 10.0):
    sigma = np.zeros(config.n_dual)
    sigma[:-1] = upper - rng.uniform(0.0, upper - lower, size=config.n_free)
    return sigma


def sample_feasible(rng, config: cm.ProblemConfig, keep_off: float = 0.1):
    """Points of the feasible space with every ``|sigma_i + 1| >= keep_off``."""
    sigma = np.zeros(config.n_dual)
    draw = rng.uniform(-3.0, 3.0, size=config.n_free)
    near = np.abs(draw + 1.0) < keep_off
    draw[near] = -1.0 + np.copysign(keep_off, draw[near] + 1.0 + 1e-300)
    sigma[:-1] = draw
    return sigma


def central_difference(f: Callable[[np.ndarray], float], x: np.ndarray, rel_step: float = 1e-6):
    g = np.empty_like(x)
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        up, down = x.copy(), x.copy()
        up[i] += h
        down[i] -= h
        g[i] = (f(up) - f(down)) / (2.0 * h)
    return g


# -- suites -------------------------------------------------------------------


def legendre(samples=1000, seed=42):
    rng = np.random.default_rng(seed)
    errs = []
    for n in _dims(rng, samples):
        c = cm.ProblemConfig(int(n))
        xi = rng.uniform(-10.0, 10.0, size=c.n_dual)
        sigma = c.alpha * xi
        lhs = cm.canonical_v(c, xi) + cm.conjugate_v_star(c, sigma)
        rhs = float(xi @ sigma)
        errs.append(abs(lhs - rhs) / max(abs(rhs), np.finfo(float).tiny))
    return _tally("legendre", errs, 1e-12)


def xi_consistency(samples=1000, seed=42):
    rng = np.random.default_rng(seed)
    errs = []
    for n in _dims(rng, samples):
        c = cm.ProblemConfig(int(n))
        x = rng.uniform(-3.0, 3.0, size=c.n)
        sigma = cm.dual_map(c, cm.canonical_measure(c, x))
        errs.append(_rel(cm.total_complementary(c, x, sigma), cm.primal_objective(c, x)))
    return _tally("xi-consistency", errs, 1e-12)


def stationary_x(samples=1000, seed=42):
    rng = np.random.default_rng(seed)
    errs = []
    for n in _dims(rng, samples, lo=3):
        c = cm.ProblemConfig(int(n))
        sigma = sample_feasible(rng, c)
        x = cm.recover_primal(c, sigma)
        errs.append(_rel(cm.dual_objective(c, sigma), cm.total_complementary(c, x, sigma)))
    return _tally("stationary-x", errs, 1e-10)


def gradients(samples=100, seed=42):
    rng = np.random.default_rng(seed)
    errs = []
    for n in _dims(rng, samples, lo=3, hi=20):
        c = cm.ProblemConfig(int(n))
        x = rng.uniform(-2.0, 2.0, size=c.n)
        g = cm.primal_gradient(c, x)
        fd = central_difference(lambda v: cm.primal_objective(c, v), x)
        errs.append(np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(g))))

        sigma = sample_s_plus(rng, c, upper=3.0)
        g = cm.dual_gradient(c, sigma)
        fd = central_difference(lambda v: cm.dual_objective(c, cm.pin_last(v)), sigma[:-1])
        errs.append(np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(g))))
    return _tally("gradients", errs, 1e-6)


def concavity(samples=1000, seed=42):
    rng = np.random.default_rng(seed)
    slack = []
    for n in _dims(rng, samples):
        c = cm.ProblemConfig(int(n))
        a, b = sample_s_plus(rng, c), sample_s_plus(rng, c)
        mid = cm.dual_objective(c, 0.5 * (a + b))
        chord = 0.5 * cm.dual_objective(c, a) + 0.5 * cm.dual_objective(c, b)
        # violation amount; <= 1e-10 passes
        slack.append(chord - mid)
    return _tally("concavity", slack, 1e-10)


def certificate(samples=1000, seed=42):
    """Dual values on the positive region never exceed the primal minimum 0."""
    rng = np.random.default_rng(seed)
    vals = []
    for n in _dims(rng, samples):
        c = cm.ProblemConfig(int(n))
        sigma = sample_s_plus(rng, c)
        value = cm.dual_objective(c, sigma)
        # strictly negative away from 0; exactly 0 at 0
        vals.append(value if np.any(sigma) else abs(value))
    for n in (2, 3, 10, 100):
        c = cm.ProblemConfig(n)
        vals.append(abs(cm.dual_objective(c, np.zeros(c.n_dual))))
    values = np.asarray(vals)
    bad = values > 0.0
    bad[-4:] = values[-4:] != 0.0
    res = SuiteResult("certificate", int((~bad).sum()), int(values.size), float(values.max()))
    res.failures = [int(i) for i in np.flatnonzero(bad)[:10]]
    return res


def s_minus(samples=1000, seed=42):
    rng = np.random.default_rng(seed)
    hits = []
    for n in _dims(rng, samples):
        c = cm.ProblemConfig(int(n))
        sigma = -1.0 - rng.uniform(1e-6, 5.0, size=c.n_dual)
        if rng.random() < 0.5:
            sigma[-1] = 0.0
        both = cm.in_s_minus(c, sigma) and cm.in_dual_feasible(c, sigma)
        hits.append(1.0 if both else 0.0)
    for n in (2, 5, 1000):
        hits.append(0.0 if cp.check_s_minus_empty(cm.ProblemConfig(n)).empty else 1.0)
    return _tally("s-minus-empty", hits, 0.0)


def duality_gap(samples=None, seed=42, dims=range(2, 9), starts=200):
    """Gap chain at every atlas critical pair for the given dimensions."""
    errs = []
    for n in dims:
        c = cm.ProblemConfig(int(n))
        for pair in cp.enumerate_critical_points(c, starts, seed).pairs:
            scale = max(1.0, abs(pair.dual_value))
            errs.append(abs(pair.primal_value - pair.dual_value) / scale)
            errs.append(abs(pair.xi_value - pair.dual_value) / scale)
    return _tally("gap", errs, 1e-9)


def parallel(samples=100, seed=42, max_workers=32):
    rng = np.random.default_rng(seed)
    errs = []
    for k in range(samples):
        c = cm.ProblemConfig(int(rng.integers(2, 3000)))
        x = rng.uniform(-3.0, 3.0, size=c.n)
        sigma = sample_feasible(rng, c)
        workers = k % max_workers + 1
        plan = pe.ChunkPlan.for_config(c, workers)
        errs.append(_rel(pe.parallel_primal(c, x, plan), cm.primal_objective(c, x)))
        errs.append(_rel(pe.parallel_dual(c, sigma, plan), cm.dual_objective(c, sigma)))
    return _tally("parallel", errs, 1e-12)


SUITES = {
    "legendre": legendre,
    "xi": xi_consistency,
    "stationary": stationary_x,
    "gradient": gradients,
    "concavity": concavity,
    "certificate": certificate,
    "s-minus": s_minus,
    "gap": duality_gap,
    "parallel": parallel,
}


def run(scope: str = "all", samples: int | None = None, seed: int = 42) -> list[SuiteResult]:
    names = list(SUITES) if scope == "all" else [scope]
    results = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
        fn = SUITES[name]
        results.append(fn(seed=seed) if samples is None else fn(samples=samples, seed=seed))
    return results
