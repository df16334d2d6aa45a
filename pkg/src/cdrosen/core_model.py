"""Rosenbrock primal problem, its canonical dual, and the quantities linking them.

Vectors are plain ``numpy`` arrays of float64. A primal point ``x`` has length
``n``; a dual point ``sigma`` has length ``n - 1`` and, inside the feasible
space, its last component is pinned to zero. Indices in docstrings are
1-based to match the usual way the problem is written down.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: |sigma_i + 1| below this is treated as a pole of the dual.
POLE_TOL = 1e-12
#: absolute tolerance on the pinned last dual component.
PIN_TOL = 1e-12
#: default distance kept from the pole by the penalized objective.
PENALTY_MARGIN = 1e-8


class DimensionError(ValueError):
    """A vector does not have the length the problem dimension requires."""


class PoleError(ArithmeticError):
    """Some ``sigma_i + 1`` vanishes, so the dual is undefined there."""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"dual pole at component {index + 1}: sigma + 1 = {value!r}")


@dataclass(frozen=True)
class ProblemConfig:
    """Dimension ``n`` and Rosenbrock parameter ``N``; ``alpha = 2 N``."""

    n: int
    big_n: float = 100.0
    alpha: float = field(init=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.n!r}")
        if not self.big_n > 0:
            raise ValueError(f"N must be positive, got {self.big_n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "big_n", float(self.big_n))
        object.__setattr__(self, "alpha", 2.0 * self.big_n)

    @property
    def n_dual(self) -> int:
        return self.n - 1

    @property
    def n_free(self) -> int:
        """Number of dual variables left once the last one is pinned."""
        return self.n - 2


@dataclass(frozen=True)
class GapReport:
    primal_value: float
    dual_value: float
    xi_value: float
    gap: float
    x: np.ndarray


def _vec(v, length: int, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != length:
        raise DimensionError(f"{name} must have length {length}, got shape {arr.shape}")
    return arr


def _check_poles(sigma: np.ndarray) -> np.ndarray:
    den = sigma + 1.0
    bad = np.flatnonzero(np.abs(den) < POLE_TOL)
    if bad.size:
        raise PoleError(int(bad[0]), float(den[bad[0]]))
    return den


def _shift_back(sigma: np.ndarray) -> np.ndarray:
    """``sigma_{i-1}`` for every i, with the convention ``sigma_0 = 0``."""
    prev = np.empty_like(sigma)
    prev[0] = 0.0
    prev[1:] = sigma[:-1]
    return prev


# -- primal side -------------------------------------------------------------


def primal_terms(x_lo: np.ndarray, x_hi: np.ndarray, alpha: float) -> np.ndarray:
    """Per-index terms ``(x_i - 1)^2 + alpha/2 (x_{i+1} - x_i^2)^2``."""
    return (x_lo - 1.0) ** 2 + 0.5 * alpha * (x_hi - x_lo**2) ** 2


def primal_objective(config: ProblemConfig, x) -> float:
    x = _vec(x, config.n, "x")
    return float(np.sum(primal_terms(x[:-1], x[1:], config.alpha)))


def primal_gradient(config: ProblemConfig, x) -> np.ndarray:
    x = _vec(x, config.n, "x")
    a = config.alpha
    lo = x[:-1]
    d = x[1:] - lo**2
    g = np.zeros_like(x)
    g[:-1] += 2.0 * (lo - 1.0) - 2.0 * a * lo * d
    g[1:] += a * d
    return g


def primal_hessian_bands(config: ProblemConfig, x) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of the (tridiagonal) primal Hessian."""
    x = _vec(x, config.n, "x")
    a = config.alpha
    diag = np.zeros_like(x)
    diag[:-1] += 2.0 - 2.0 * a * x[1:] + 6.0 * a * x[:-1] ** 2
    diag[1:] += a
    off = -2.0 * a * x[:-1]
    return diag, off


def canonical_measure(config: ProblemConfig, x) -> np.ndarray:
    x = _vec(x, config.n, "x")
    return x[:-1] ** 2 - x[1:]


def canonical_v(config: ProblemConfig, xi) -> float:
    xi = _vec(xi, config.n_dual, "xi")
    return float(np.sum(0.5 * config.alpha * xi**2))


def dual_map(config: ProblemConfig, xi) -> np.ndarray:
    xi = _vec(xi, config.n_dual, "xi")
    return config.alpha * xi


def conjugate_v_star(config: ProblemConfig, sigma) -> float:
    sigma = _vec(sigma, config.n_dual, "sigma")
    return float(np.sum(sigma**2 / (2.0 * config.alpha)))


def total_complementary(config: ProblemConfig, x, sigma) -> float:
    x = _vec(x, config.n, "x")
    sigma = _vec(sigma, config.n_dual, "sigma")
    lo = x[:-1]
    terms = (lo - 1.0) ** 2 + sigma * (lo**2 - x[1:]) - sigma**2 / (2.0 * config.alpha)
    return float(np.sum(terms))


# -- dual side ---------------------------------------------------------------


def dual_terms(sigma_prev: np.ndarray, sigma: np.ndarray, alpha: float) -> np.ndarray:
    """Bracketed terms of the canonical dual; no pole check here."""
    return (sigma_prev + 2.0) ** 2 / (4.0 * (sigma + 1.0)) + sigma**2 / (2.0 * alpha)


def dual_objective(config: ProblemConfig, sigma) -> float:
    """Canonical dual value ``(n-1) - sum[(sigma_{i-1}+2)^2 / (4(sigma_i+1)) + sigma_i^2/(2 alpha)]``.

    Raises :class:`PoleError` when any ``sigma_i + 1`` vanishes.
    """
    sigma = _vec(sigma, config.n_dual, "sigma")
    _check_poles(sigma)
    terms = dual_terms(_shift_back(sigma), sigma, config.alpha)
    return float(config.n_dual - np.sum(terms))


def dual_gradient_full(config: ProblemConfig, sigma) -> np.ndarray:
    """Gradient of the dual with respect to all ``n - 1`` components."""
    sigma = _vec(sigma, config.n_dual, "sigma")
    den = _check_poles(sigma)
    prev = _shift_back(sigma)
    g = (prev + 2.0) ** 2 / (4.0 * den**2) - sigma / config.alpha
    g[:-1] -= (sigma[:-1] + 2.0) / (2.0 * den[1:])
    return g


def dual_gradient(config: ProblemConfig, sigma) -> np.ndarray:
    """Gradient over the free components ``sigma_1 .. sigma_{n-2}``.

    The last component is pinned, so it is not a variable and its partial
    derivative is dropped. Length ``n - 2`` (empty for ``n = 2``).
    """
    return dual_gradient_full(config, sigma)[:-1]


def dual_hessian_bands(config: ProblemConfig, sigma) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of the dual Hessian over all ``n - 1`` components."""
    sigma = _vec(sigma, config.n_dual, "sigma")
    den = _check_poles(sigma)
    prev = _shift_back(sigma)
    diag = -((prev + 2.0) ** 2) / (2.0 * den**3) - 1.0 / config.alpha
    diag[:-1] -= 1.0 / (2.0 * den[1:])
    off = (sigma[:-1] + 2.0) / (2.0 * den[1:] ** 2)
    return diag, off


def recover_primal(config: ProblemConfig, sigma) -> np.ndarray:
    """Primal point ``x_i = (sigma_{i-1} + 2) / (2 (sigma_i + 1))``, ``x_n = x_{n-1}^2``."""
    sigma = _vec(sigma, config.n_dual, "sigma")
    den = _check_poles(sigma)
    x = np.empty(config.n)
    x[:-1] = (_shift_back(sigma) + 2.0) / (2.0 * den)
    x[-1] = x[-2] ** 2
    return x


def duality_gap(config: ProblemConfig, sigma) -> GapReport:
    x = recover_primal(config, sigma)
    p = primal_objective(config, x)
    d = dual_objective(config, sigma)
    xi = total_complementary(config, x, sigma)
    return GapReport(primal_value=p, dual_value=d, xi_value=xi, gap=p - d, x=x)


# -- dual regions ------------------------------------------------------------


def in_dual_feasible(config: ProblemConfig, sigma) -> bool:
    sigma = _vec(sigma, config.n_dual, "sigma")
    if not np.all(np.isfinite(sigma)):
        return False
    if abs(sigma[-1]) > PIN_TOL:
        return False
    return bool(np.all(np.abs(sigma[:-1] + 1.0) >= POLE_TOL))


def in_s_plus(config: ProblemConfig, sigma) -> bool:
    sigma = _vec(sigma, config.n_dual, "sigma")
    return in_dual_feasible(config, sigma) and bool(np.all(sigma + 1.0 > 0.0))


def in_s_minus(config: ProblemConfig, sigma) -> bool:
    sigma = _vec(sigma, config.n_dual, "sigma")
    return in_dual_feasible(config, sigma) and bool(np.all(sigma + 1.0 < 0.0))


def pin_last(free) -> np.ndarray:
    """Full dual vector from the free components, with the last set to 0."""
    free = np.asarray(free, dtype=float)
    return np.append(free, 0.0)


# -- penalized formulation ---------------------------------------------------


def constraint_penalty(sigma: np.ndarray, margin: float = PENALTY_MARGIN) -> float:
    """``sum max(0, -(sigma_i + 1 - margin))^2 + sigma_{n-1}^2`` (unweighted)."""
    violation = np.maximum(0.0, -(sigma + 1.0 - margin))
    return float(np.sum(violation**2)) + float(sigma[-1]) ** 2


def penalized_dual_objective(
    config: ProblemConfig,
    sigma_full,
    penalty_weight: float,
    margin: float = PENALTY_MARGIN,
    dual=None,
) -> float:
    """Minimization form of the dual over all ``n - 1`` variables.

    Returns ``-dual + w * constraint_penalty``, or ``inf`` exactly at a pole.
    ``dual`` swaps in another evaluator with the signature of
    :func:`dual_objective`.
    """
    if not penalty_weight > 0:
        raise ValueError("penalty_weight must be positive")
    sigma = _vec(sigma_full, config.n_dual, "sigma")
    try:
        value = (dual or dual_objective)(config, sigma)
    except PoleError:
        return float("inf")
    return -value + penalty_weight * constraint_penalty(sigma, margin)


def penalized_dual_gradient(
    config: ProblemConfig, sigma_full, penalty_weight: float, margin: float = PENALTY_MARGIN
) -> np.ndarray:
    sigma = _vec(sigma_full, config.n_dual, "sigma")
    violation = np.maximum(0.0, -(sigma + 1.0 - margin))
    g = -dual_gradient_full(config, sigma) - 2.0 * penalty_weight * violation
    g[-1] += 2.0 * penalty_weight * sigma[-1]
    return g
