"""Local minimizers with exact iteration and function-call accounting.

Two engines:

* :func:`derivative_free_minimize` -- a Hooke-Jeeves pattern search (compass
  exploration in fixed coordinate order plus pattern extrapolation).
* :func:`gradient_minimize` -- steepest descent with Armijo backtracking.

:func:`solve_dual` maximizes the canonical dual over its free variables using
either engine.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import core_model as cm

Objective = Callable[[np.ndarray], float]


ROUNDING_SLACK = 64.0


class Termination(str, enum.Enum):
    STEP_TOLERANCE = "StepTolerance"
    GRADIENT_TOLERANCE = "GradientTolerance"
    ITERATION_BUDGET = "IterationBudget"
    CALL_BUDGET = "CallBudget"
    POLE_STALL = "PoleStall"
    CLOSED_FORM = "ClosedForm"


class Method(str, enum.Enum):
    PATTERN_SEARCH = "pattern"
    GRADIENT_ASCENT = "gradient"


class SolverError(RuntimeError):
    pass


class Diverged(SolverError):
    """The objective returned NaN or -inf."""


class LineSearchStall(SolverError):
    """Backtracking found no acceptable step above the minimum step length."""


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 100_000
    max_function_calls: int = 50_000_000
    step_tolerance: float = 1e-8
    gradient_tolerance: float = 1e-8
    initial_step: float = 1.0
    box_lower: Optional[float] = None
    box_upper: Optional[float] = None

    def __post_init__(self):
        if self.max_iterations <= 0 or self.max_function_calls <= 0:
            raise ValueError("iteration and call budgets must be positive")
        if not (self.step_tolerance > 0 and self.gradient_tolerance > 0):
            raise ValueError("tolerances must be positive")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        lo, hi = self.box_lower, self.box_upper
        if lo is not None and hi is not None and not lo < hi:
            raise ValueError("box_lower must be below box_upper")

    @property
    def has_box(self) -> bool:
        return self.box_lower is not None or self.box_upper is not None

    def clip(self, x: np.ndarray) -> np.ndarray:
        if not self.has_box:
            return x
        lo = -np.inf if self.box_lower is None else self.box_lower
        hi = np.inf if self.box_upper is None else self.box_upper
        return np.clip(x, lo, hi)

    def inside(self, value: float) -> bool:
        if self.box_lower is not None and value < self.box_lower:
            return False
        if self.box_upper is not None and value > self.box_upper:
            return False
        return True


@dataclass
class SolverReport:
    iterations: int
    function_calls: int
    final_value: float
    final_point: np.ndarray
    termination: Termination
    wall_time_ms: float
    gradient_calls: int = 0
    history: list = field(default_factory=list, repr=False)


class CountingObjective:
    """Wraps a callable and counts how many times it is evaluated."""

    def __init__(self, fn: Objective):
        self.fn = fn
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.fn(x)


class _OutOfCalls(Exception):
    pass


class _Counter:
    def __init__(self, fn: Objective, budget: int):
        self.fn = fn
        self.budget = budget
        self.calls = 0

    def __call__(self, x: np.ndarray) -> float:
        if self.calls >= self.budget:
            raise _OutOfCalls
        self.calls += 1
        value = float(self.fn(x))
        if math.isnan(value) or value == -math.inf:
            raise Diverged(f"objective returned {value} after {self.calls} calls")
        return value


def derivative_free_minimize(
    objective: Objective, x0, cfg: SolverConfig = SolverConfig(), record_history: bool = False
) -> SolverReport:
    """Hooke-Jeeves pattern search.

    Each iteration either extrapolates along the last successful move and
    explores around the result, or explores around the current base point.
    Exploration polls ``+step`` then ``-step`` on each coordinate in index
    order and keeps the first improvement per coordinate. When exploration
    around the base fails, the step is halved. Trial points that return
    ``+inf`` are treated as rejected; points outside the box are never
    evaluated.
    """
    start = time.perf_counter()
    f = _Counter(objective, cfg.max_function_calls)
    base = np.array(x0, dtype=float)
    if base.ndim != 1:
        raise ValueError("x0 must be a vector")
    if cfg.has_box and not np.array_equal(cfg.clip(base), base):
        raise ValueError("x0 lies outside the box")
    fbase = f(base)
    if not math.isfinite(fbase):
        raise ValueError(f"objective is not finite at x0 ({fbase})")

    history = [fbase] if record_history else []
    step = cfg.initial_step
    prev: Optional[np.ndarray] = None
    iterations = 0

    def explore(point: np.ndarray, fpoint: float):
        point = point.copy()
        for i in range(point.shape[0]):
            xi = point[i]
            for trial_value in (xi + step, xi - step):
                if not cfg.inside(trial_value):
                    continue
                point[i] = trial_value
                ft = f(point)
                if ft < fpoint:
                    fpoint = ft
                    break
                point[i] = xi
        return point, fpoint

    try:
        while True:
            if step < cfg.step_tolerance:
                termination = Termination.STEP_TOLERANCE
                break
            if iterations >= cfg.max_iterations:
                termination = Termination.ITERATION_BUDGET
                break
            iterations += 1
            if prev is not None:
                trial = cfg.clip(2.0 * base - prev)
                ft = f(trial)
                x, fx = explore(trial, ft)
                if fx < fbase:
                    prev, base, fbase = base, x, fx
                    if record_history:
                        history.append(fbase)
                    continue
                prev = None
            x, fx = explore(base, fbase)
            if fx < fbase:
                prev, base, fbase = base, x, fx
            else:
                step *= 0.5
            if record_history:
                history.append(fbase)
    except _OutOfCalls:
        termination = Termination.CALL_BUDGET

    return SolverReport(
        iterations=iterations,
        function_calls=f.calls,
        final_value=fbase,
        final_point=base,
        termination=termination,
        wall_time_ms=1e3 * (time.perf_counter() - start),
        history=history,
    )


def gradient_minimize(
    objective: Objective,
    gradient: Callable[[np.ndarray], np.ndarray],
    x0,
    cfg: SolverConfig = SolverConfig(),
    *,
    armijo_c: float = 1e-4,
    backtrack: float = 0.5,
    first_step: float = 1.0,
    min_step: float = 1e-16,
    record_history: bool = False,
) -> SolverReport:
    """Steepest descent with Armijo backtracking.

    Every line search starts from ``first_step`` and halves until
    ``f(x - t g) <= f(x) - c t |g|^2`` (projected onto the box when one is
    set). ``+inf`` trial values count as failures, which is how pole
    rejection reaches this solver. When the first trial shorter than the step
    tolerance changes ``f`` only at rounding level, the search stops with
    ``StepTolerance``; otherwise a failed search raises :class:`LineSearchStall`.
    """
    start = time.perf_counter()
    f = _Counter(objective, cfg.max_function_calls)
    x = cfg.clip(np.array(x0, dtype=float))
    fx = f(x)
    if not math.isfinite(fx):
        raise ValueError(f"objective is not finite at x0 ({fx})")
    history = [fx] if record_history else []
    grad_calls = 0
    iterations = 0

    try:
        while True:
            g = np.asarray(gradient(x), dtype=float)
            grad_calls += 1
            if not np.all(np.isfinite(g)):
                raise Diverged("non-finite gradient")
            if g.size == 0 or np.max(np.abs(g)) <= cfg.gradient_tolerance:
                termination = Termination.GRADIENT_TOLERANCE
                break
            if iterations >= cfg.max_iterations:
                termination = Termination.ITERATION_BUDGET
                break
            iterations += 1

            t = first_step
            saw_finite = False
            checked_noise = False
            while True:
                trial = cfg.clip(x - t * g)
                ft = f(trial)
                if math.isfinite(ft):
                    saw_finite = True
                    if ft <= fx + armijo_c * float(g @ (trial - x)):
                        break
                    # below the step tolerance with a change at rounding level:
                    # x is as stationary as floating point can tell
                    noise = ROUNDING_SLACK * np.finfo(float).eps * max(1.0, abs(fx))
                    if not checked_noise and np.max(np.abs(trial - x)) < cfg.step_tolerance:
                        checked_noise = True
                        if abs(ft - fx) <= noise:
                            termination = Termination.STEP_TOLERANCE
                            raise StopIteration
                t *= backtrack
                if t < min_step:
                    if not saw_finite:
                        termination = Termination.POLE_STALL
                        raise StopIteration
                    raise LineSearchStall(
                        f"no Armijo step above {min_step} at iteration {iterations}"
                    )
            moved = float(np.max(np.abs(trial - x)))
            x, fx = trial, ft
            if record_history:
                history.append(fx)
            if moved < cfg.step_tolerance:
                termination = Termination.STEP_TOLERANCE
                break
    except _OutOfCalls:
        termination = Termination.CALL_BUDGET
    except StopIteration:
        pass

    return SolverReport(
        iterations=iterations,
        function_calls=f.calls,
        final_value=fx,
        final_point=x,
        termination=termination,
        wall_time_ms=1e3 * (time.perf_counter() - start),
        gradient_calls=grad_calls,
        history=history,
    )


# -- dual solve ----------------------------------------------------------------


def _negated_dual(config: cm.ProblemConfig, margin: float, evaluate=None) -> Objective:
    """``-P^d`` over the free variables, ``+inf`` outside ``sigma_i + 1 > margin``."""
    n_dual = config.n_dual
    evaluate = evaluate or cm.dual_objective

    def objective(free: np.ndarray) -> float:
        if np.any(free <= margin - 1.0):
            return math.inf
        sigma = np.zeros(n_dual)
        sigma[:-1] = free
        return -evaluate(config, sigma)

    return objective


def _negated_dual_gradient(config: cm.ProblemConfig) -> Callable[[np.ndarray], np.ndarray]:
    def gradient(free: np.ndarray) -> np.ndarray:
        return -cm.dual_gradient(config, cm.pin_last(free))

    return gradient


def solve_dual(
    config: cm.ProblemConfig,
    sigma0,
    cfg: SolverConfig = SolverConfig(initial_step=0.1),
    method: Method | str = Method.PATTERN_SEARCH,
    *,
    feasibility: str = "reject",
    penalty_weight: float = 1e6,
    margin: float = cm.PENALTY_MARGIN,
    evaluate=None,
) -> SolverReport:
    """Maximize the canonical dual on the region ``sigma_i + 1 > 0``.

    ``feasibility="reject"`` optimizes the ``n - 2`` free components with the
    last one pinned at 0 and scores infeasible trials as ``+inf``.
    ``feasibility="penalty"`` optimizes all ``n - 1`` components of the
    penalized objective instead. Either way the returned ``final_point`` is
    the full dual vector and ``final_value`` is the dual value there (not
    negated). ``evaluate`` replaces the dual evaluator, e.g. with a parallel
    one; it must have the signature of :func:`core_model.dual_objective`.
    """
    method = Method(method)
    sigma0 = np.array(sigma0, dtype=float)
    if sigma0.shape != (config.n_dual,):
        raise cm.DimensionError(f"sigma0 must have length {config.n_dual}")
    if np.any(sigma0 + 1.0 <= 0.0):
        raise ValueError("sigma0 must satisfy sigma_i + 1 > 0")
    evaluate = evaluate or cm.dual_objective

    if feasibility == "reject":
        if config.n_free == 0:
            sigma = np.zeros(1)
            return SolverReport(0, 0, evaluate(config, sigma), sigma, Termination.CLOSED_FORM, 0.0)
        objective = _negated_dual(config, margin, evaluate)
        gradient = _negated_dual_gradient(config)
        x0 = sigma0[:-1]
        wrap = cm.pin_last
    elif feasibility == "penalty":

        def objective(s):
            return cm.penalized_dual_objective(config, s, penalty_weight, margin, dual=evaluate)

        def gradient(s):
            return cm.penalized_dual_gradient(config, s, penalty_weight, margin)

        x0 = sigma0

        def wrap(s):
            return s
    else:
        raise ValueError(f"unknown feasibility mode {feasibility!r}")

    if method is Method.PATTERN_SEARCH:
        report = derivative_free_minimize(objective, x0, cfg)
    else:
        report = gradient_minimize(objective, gradient, x0, cfg)

    sigma = wrap(report.final_point)
    report.final_point = sigma
    report.final_value = evaluate(config, sigma)
    return report


def solve_primal(
    config: cm.ProblemConfig,
    x0,
    cfg: SolverConfig = SolverConfig(),
    method: Method | str = Method.PATTERN_SEARCH,
    *,
    evaluate=None,
) -> SolverReport:
    method = Method(method)
    evaluate = evaluate or cm.primal_objective

    def objective(x):
        return evaluate(config, x)

    def gradient(x):
        return cm.primal_gradient(config, x)

    if method is Method.PATTERN_SEARCH:
        return derivative_free_minimize(objective, x0, cfg)
    return gradient_minimize(objective, gradient, x0, cfg)
