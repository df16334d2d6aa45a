"""Rosenbrock minimization through the canonical dual problem."""

from .core_model import (
    DimensionError,
    GapReport,
    PoleError,
    ProblemConfig,
    canonical_measure,
    canonical_v,
    conjugate_v_star,
    dual_gradient,
    dual_map,
    dual_objective,
    duality_gap,
    in_dual_feasible,
    in_s_minus,
    in_s_plus,
    penalized_dual_objective,
    primal_gradient,
    primal_objective,
    recover_primal,
    total_complementary,
)
from .solvers import SolverConfig, SolverReport, Termination, solve_dual

__version__ = "0.1.0"
