"""Acceptance criteria, each checked at its stated tolerance.

Every test records one PASS/FAIL line, printed in the "acceptance criteria"
section of the pytest summary. Run alone with::

    pytest tests/test_acceptance.py -v
"""

import time

import numpy as np
import pytest

from cdrosen import core_model as cm
from cdrosen import verification
from cdrosen.cli import main
from cdrosen.core_model import ProblemConfig
from cdrosen.critical_points import PrimalClass, Region, enumerate_critical_points
from cdrosen.parallel_eval import ChunkPlan, parallel_dual, parallel_primal
from cdrosen.solvers import SolverConfig, derivative_free_minimize, solve_dual

DUAL_CFG = SolverConfig(initial_step=0.1)


def dual_solve_errors(n, fill):
    """Worst shortfalls of one dual solve against the global-solve bounds."""
    c = ProblemConfig(n)
    sigma0 = np.r_[np.full(n - 2, fill), 0.0]
    r = solve_dual(c, sigma0, DUAL_CFG)
    x = cm.recover_primal(c, r.final_point)
    return {
        "dual": r.final_value,
        "sigma": float(np.max(np.abs(r.final_point))),
        "x": float(np.max(np.abs(x - 1.0))),
        "primal": cm.primal_objective(c, x),
    }


def within_dual_bounds(e):
    return e["dual"] >= -1e-6 and e["sigma"] <= 1e-4 and e["x"] <= 1e-4 and e["primal"] <= 1e-6


def sweep(dims, fill):
    bad, worst = [], {"dual": 0.0, "sigma": 0.0, "x": 0.0, "primal": 0.0}
    for n in dims:
        e = dual_solve_errors(n, fill)
        worst = {
            "dual": min(worst["dual"], e["dual"]),
            "sigma": max(worst["sigma"], e["sigma"]),
            "x": max(worst["x"], e["x"]),
            "primal": max(worst["primal"], e["primal"]),
        }
        if not within_dual_bounds(e):
            bad.append(n)
    detail = (
        f"min P^d={worst['dual']:.2e} max|sigma|={worst['sigma']:.2e} "
        f"max|x-1|={worst['x']:.2e} max P={worst['primal']:.2e}"
    )
    return bad, detail


def test_c1_global_dual_solve_seed1(acceptance_log):
    dims = list(range(2, 11)) + [20, 50, 100, 500, 1000]
    t0 = time.perf_counter()
    bad, detail = sweep(dims, -2.0 / 3.0)
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 120.0
    acceptance_log("C1 dual solve, seed1", ok, f"{detail} time={elapsed:.1f}s failing={bad}")
    assert ok


def test_c2_seed2_dual_robustness(acceptance_log):
    bad, detail = sweep(list(range(2, 11)) + [100], 100.0)
    acceptance_log("C2 dual solve, seed2", not bad, f"{detail} failing={bad}")
    assert not bad


def test_c3_zero_duality_gap(acceptance_log):
    worst, count = 0.0, 0
    for n in range(2, 9):
        for p in enumerate_critical_points(ProblemConfig(n), 200, 42).pairs:
            scale = max(1.0, abs(p.dual_value))
            worst = max(worst, abs(p.primal_value - p.dual_value) / scale, abs(p.xi_value - p.dual_value) / scale)
            count += 1
    ok = worst <= 1e-9
    acceptance_log("C3 zero duality gap", ok, f"{count} pairs, worst relative gap={worst:.2e}")
    assert ok


def test_c4_two_minima_structure(acceptance_log):
    t0 = time.perf_counter()
    notes, ok = [], True
    for n in (5, 6, 7):
        c = ProblemConfig(n)
        minima = [
            p for p in enumerate_critical_points(c, 200, 42).pairs if p.primal_class is PrimalClass.LOCAL_MIN
        ]
        zero = [p for p in minima if np.all(p.sigma == 0.0) and p.primal_value == 0.0 and np.all(p.x == 1.0)]
        mixed = [
            p
            for p in minima
            if p.region is Region.MIXED and p.x[0] < 0.0 and 3.9 <= p.primal_value <= 4.1
        ]
        good = len(minima) == 2 and len(zero) == 1 and len(mixed) == 1
        ok &= good
        notes.append(f"n={n}:{len(minima)} min" + (f" ({mixed[0].primal_value:.8f})" if mixed else ""))
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60.0
    acceptance_log("C4 two-minima structure", ok, f"{'; '.join(notes)} time={elapsed:.1f}s")
    assert ok


def test_c5_exact_anchors(acceptance_log):
    ok = True
    for n in (5, 6, 7):
        ok &= cm.primal_objective(ProblemConfig(n), np.r_[-1.0, np.ones(n - 1)]) == 4.0
    for n in (2, 3, 4, 5, 10, 100, 1000, 4000):
        c = ProblemConfig(n)
        ok &= cm.dual_objective(c, np.zeros(c.n_dual)) == 0.0
        ok &= cm.primal_objective(c, np.ones(n)) == 0.0
    acceptance_log("C5 exact anchors", ok, "P(-1,1,..,1)=4, P^d(0)=0, P(1,..,1)=0")
    assert ok


def test_c6_property_suites(acceptance_log, capsys):
    code = main(["verify"])
    out = capsys.readouterr().out
    concavity = verification.concavity(1000, 42)
    ok = code == 0 and concavity.passed == concavity.total == 1000
    acceptance_log(
        "C6 property suites",
        ok,
        f"verify exit={code}, concavity {concavity.passed}/{concavity.total}",
    )
    assert ok, out


def test_c7_parallel_serial_equivalence(acceptance_log):
    rng = np.random.default_rng(42)
    worst = 0.0
    for k in range(100):
        c = ProblemConfig(int(rng.integers(2, 3000)))
        x = rng.uniform(-3.0, 3.0, size=c.n)
        sigma = np.r_[rng.uniform(-0.99, 5.0, size=c.n_free), 0.0]
        plan = ChunkPlan.for_config(c, k % 32 + 1)
        for par, ser in (
            (parallel_primal(c, x, plan), cm.primal_objective(c, x)),
            (parallel_dual(c, sigma, plan), cm.dual_objective(c, sigma)),
        ):
            worst = max(worst, abs(par - ser) / max(1.0, abs(ser)))

    big = ProblemConfig(1_000_000)
    xb = rng.uniform(-2.0, 2.0, size=big.n)
    t0 = time.perf_counter()
    value = parallel_primal(big, xb, ChunkPlan.for_config(big, 8))
    elapsed = time.perf_counter() - t0
    worst = max(worst, abs(value - cm.primal_objective(big, xb)) / max(1.0, abs(value)))
    ok = worst <= 1e-12 and elapsed < 5.0
    acceptance_log("C7 parallel = serial", ok, f"worst rel={worst:.2e}, n=1e6 in {elapsed:.3f}s")
    assert ok


def test_c8_local_trap_contrast(acceptance_log):
    c = ProblemConfig(6)
    x0 = np.r_[-1.0005, np.full(5, 1.0005)]
    primal = derivative_free_minimize(lambda x: cm.primal_objective(c, x), x0, SolverConfig())
    dual = solve_dual(c, np.r_[np.full(4, -2.0 / 3.0), 0.0], DUAL_CFG)
    ok = 3.9 <= primal.final_value <= 4.02 and dual.final_value >= -1e-8
    acceptance_log(
        "C8 local trap contrast",
        ok,
        f"primal stuck at {primal.final_value:.8f}, dual reached {dual.final_value:.2e}",
    )
    assert ok


@pytest.fixture(autouse=True)
def _quiet_numpy():
    with np.errstate(all="ignore"):
        yield
