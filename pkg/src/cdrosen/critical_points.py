"""Critical points of the canonical dual and their primal counterparts.

A dual point ``sigma`` with zero stationarity residual maps, through the
analytic recovery ``x = recover_primal(sigma)``, to a critical point of the
Rosenbrock function with the same objective value. This module finds such
points by damped Newton, classifies the recovered primal point by its
Hessian spectrum, and enumerates them by multistart.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal, solve_banded

from . import core_model as cm

EIGEN_THRESHOLD = 1e-8
DEDUP_TOL = 1e-6


class Region(str, enum.Enum):
    S_PLUS = "SPlus"
    MIXED = "Mixed"


class PrimalClass(str, enum.Enum):
    LOCAL_MIN = "LocalMin"
    LOCAL_MAX = "LocalMax"
    SADDLE = "Saddle"
    DEGENERATE = "Degenerate"


class NoConvergence(RuntimeError):
    def __init__(self, message: str, sigma: np.ndarray, residual: float):
        super().__init__(message)
        self.sigma = sigma
        self.residual = residual


@dataclass(frozen=True)
class CriticalPair:
    sigma: np.ndarray
    x: np.ndarray
    primal_value: float
    dual_value: float
    xi_value: float
    gap: float
    residual: float
    region: Region
    primal_class: PrimalClass
    min_eigenvalue: float


@dataclass(frozen=True)
class SMinusRecord:
    empty: bool
    witness: str


def stationarity_residual(config: cm.ProblemConfig, sigma) -> np.ndarray:
    """``sigma_i - alpha (x_i^2 - x_{i+1})`` at ``x = recover_primal(sigma)``.

    The last component vanishes identically because ``x_n = x_{n-1}^2``.
    """
    sigma = np.asarray(sigma, dtype=float)
    x = cm.recover_primal(config, sigma)
    return sigma - config.alpha * (x[:-1] ** 2 - x[1:])


def residual_jacobian_bands(config: cm.ProblemConfig, sigma) -> tuple[np.ndarray, np.ndarray]:
    """Bands of d(residual)/d(sigma) over the free components.

    The residual equals ``-alpha`` times the dual gradient, so its Jacobian is
    ``-alpha`` times the dual Hessian restricted to the first ``n - 2``
    components.
    """
    diag, off = cm.dual_hessian_bands(config, sigma)
    return -config.alpha * diag[:-1], -config.alpha * off[:-1]


def _solve_tridiagonal(diag: np.ndarray, off: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    m = diag.shape[0]
    ab = np.zeros((3, m))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    return solve_banded((1, 1), ab, rhs)


def residual_noise_floor(config: cm.ProblemConfig, sigma) -> float:
    """First-order bound on rounding error in the free residual components.

    Near a pole the recovery divides two small differences, so the residual
    cannot be resolved below this level in double precision.
    """
    eps = np.finfo(float).eps
    sigma = np.asarray(sigma, dtype=float)
    x = cm.recover_primal(config, sigma)
    prev = np.concatenate(([0.0], sigma[:-1]))
    cond_num = (np.abs(prev) + 2.0) / np.abs(prev + 2.0) if np.all(prev + 2.0) else np.inf
    cond_den = (np.abs(sigma) + 1.0) / np.abs(sigma + 1.0)
    dx = np.empty(config.n)
    dx[:-1] = eps * (2.0 + cond_num + cond_den) * np.abs(x[:-1])
    dx[-1] = 2.0 * np.abs(x[-2]) * dx[-2] + eps * x[-1]
    lo, hi = np.abs(x[:-1]), np.abs(x[1:])
    dr = eps * np.abs(sigma) + config.alpha * (
        2.0 * lo * dx[:-1] + dx[1:] + eps * (lo**2 + hi)
    )
    return float(8.0 * np.max(dr[:-1])) if dr.size > 1 else 0.0


def _free_residual_norm(config, sigma) -> float:
    r = stationarity_residual(config, sigma)[:-1]
    return float(np.max(np.abs(r))) if r.size else 0.0


def classify_primal(config: cm.ProblemConfig, x) -> tuple[PrimalClass, float]:
    diag, off = cm.primal_hessian_bands(config, x)
    eig = eigvalsh_tridiagonal(diag, off)
    lo, hi = float(eig[0]), float(eig[-1])
    if lo > EIGEN_THRESHOLD:
        return PrimalClass.LOCAL_MIN, lo
    if hi < -EIGEN_THRESHOLD:
        return PrimalClass.LOCAL_MAX, lo
    if lo < -EIGEN_THRESHOLD and hi > EIGEN_THRESHOLD:
        return PrimalClass.SADDLE, lo
    return PrimalClass.DEGENERATE, lo


def assemble_pair(config: cm.ProblemConfig, sigma, residual: float | None = None) -> CriticalPair:
    sigma = np.array(sigma, dtype=float)
    report = cm.duality_gap(config, sigma)
    if residual is None:
        residual = _free_residual_norm(config, sigma)
    region = Region.S_PLUS if np.all(sigma + 1.0 > 0.0) else Region.MIXED
    cls, lam = classify_primal(config, report.x)
    return CriticalPair(
        sigma=sigma,
        x=report.x,
        primal_value=report.primal_value,
        dual_value=report.dual_value,
        xi_value=report.xi_value,
        gap=report.gap,
        residual=residual,
        region=region,
        primal_class=cls,
        min_eigenvalue=lam,
    )


def find_critical_point(
    config: cm.ProblemConfig,
    sigma0,
    tol: float = 1e-12,
    max_iterations: int = 100,
    max_halvings: int = 30,
) -> CriticalPair:
    """Damped Newton on the stationarity residual over the free components.

    Each full Newton step is halved (at most ``max_halvings`` times) until the
    residual's infinity norm decreases; trial points on a pole count as no
    decrease. When no damped step helps but the residual is already inside
    :func:`residual_noise_floor`, the point is accepted as converged to
    working precision. Raises :class:`NoConvergence` if the residual cannot
    be pushed below ``tol``, and :class:`core_model.PoleError` if ``sigma0`` is a pole.
    """
    sigma = np.array(sigma0, dtype=float)
    if sigma.shape != (config.n_dual,):
        raise cm.DimensionError(f"sigma0 must have length {config.n_dual}")
    sigma[-1] = 0.0
    res = _free_residual_norm(config, sigma)

    for _ in range(max_iterations):
        if res <= tol:
            return assemble_pair(config, sigma, res)
        r = stationarity_residual(config, sigma)[:-1]
        diag, off = residual_jacobian_bands(config, sigma)
        try:
            step = _solve_tridiagonal(diag, off, -r)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NoConvergence(f"singular Jacobian: {exc}", sigma, res) from exc
        if not np.all(np.isfinite(step)):
            raise NoConvergence("non-finite Newton step", sigma, res)

        t = 1.0
        for _ in range(max_halvings + 1):
            trial = sigma.copy()
            trial[:-1] += t * step
            try:
                trial_res = _free_residual_norm(config, trial)
            except cm.PoleError:
                trial_res = np.inf
            if trial_res < res:
                break
            t *= 0.5
        else:
            if res <= residual_noise_floor(config, sigma):
                return assemble_pair(config, sigma, res)
            raise NoConvergence(
                f"damping failed to reduce the residual below {res:.3e}", sigma, res
            )
        sigma, res = trial, trial_res

    if res <= max(tol, residual_noise_floor(config, sigma)):
        return assemble_pair(config, sigma, res)
    raise NoConvergence(f"residual {res:.3e} above {tol:.1e} after budget", sigma, res)


def polish_primal(config: cm.ProblemConfig, x0, iterations: int = 50, gtol: float = 1e-10) -> np.ndarray:
    """Damped Newton on the primal gradient; used only to seed dual starts."""
    x = np.array(x0, dtype=float)
    g = cm.primal_gradient(config, x)
    for _ in range(iterations):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= gtol:
            break
        diag, off = cm.primal_hessian_bands(config, x)
        try:
            step = _solve_tridiagonal(diag, off, -g)
        except (np.linalg.LinAlgError, ValueError):
            break
        t = 1.0
        for _ in range(31):
            trial = x + t * step
            g_trial = cm.primal_gradient(config, trial)
            if np.linalg.norm(g_trial) < gnorm:
                break
            t *= 0.5
        else:
            break
        x, g = trial, g_trial
    return x


def structured_starts(config: cm.ProblemConfig) -> list[np.ndarray]:
    """Dual starts built from the sign-flip points ``(+-1, 1, ..., 1)``.

    ``(-1, 1, ..., 1)`` itself maps to ``sigma = 0``, so the sign-flipped point
    is first polished to a nearby primal critical point and then mapped
    through ``dual_map(canonical_measure(x))``. The raw seed with the first
    component set to ``-2`` is included as well.
    """
    n = config.n
    starts = [np.zeros(config.n_dual)]
    flipped = np.ones(n)
    flipped[0] = -1.0
    x = polish_primal(config, flipped)
    sigma = cm.dual_map(config, cm.canonical_measure(config, x))
    sigma[-1] = 0.0
    if np.all(np.isfinite(sigma)):
        starts.append(sigma)
    raw = np.zeros(config.n_dual)
    if config.n_free:
        raw[0] = -2.0
    starts.append(raw)
    return starts


def random_starts(config: cm.ProblemConfig, count: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    starts = []
    for _ in range(count):
        sigma = np.zeros(config.n_dual)
        # uniform on (-0.99, 3]: mirror numpy's [low, high) draw
        sigma[:-1] = 3.0 - rng.uniform(0.0, 3.99, size=config.n_free)
        starts.append(sigma)
    return starts


@dataclass
class Atlas:
    pairs: list[CriticalPair]
    n_starts: int
    n_failed: int


def enumerate_critical_points(
    config: cm.ProblemConfig,
    n_starts: int = 200,
    seed: int = 42,
    tol: float = 1e-12,
    workers: int = 1,
    max_n: int = 12,
) -> Atlas:
    """Multistart Newton from random and structured starts, deduplicated.

    Pairs closer than ``DEDUP_TOL`` in sigma (infinity norm) are merged. The
    result is sorted by primal value, then lexicographically by sigma.
    """
    if config.n > max_n:
        raise ValueError(f"enumeration is limited to n <= {max_n}")
    starts = structured_starts(config) + random_starts(config, n_starts, seed)

    def attempt(s):
        try:
            return find_critical_point(config, s, tol=tol)
        except (NoConvergence, cm.PoleError):
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(attempt, starts))
    else:
        results = [attempt(s) for s in starts]

    pairs: list[CriticalPair] = []
    failed = 0
    for pair in results:
        if pair is None:
            failed += 1
            continue
        if any(np.max(np.abs(pair.sigma - q.sigma)) <= DEDUP_TOL for q in pairs):
            continue
        pairs.append(pair)
    pairs.sort(key=lambda p: (p.primal_value, tuple(p.sigma)))
    return Atlas(pairs=pairs, n_starts=len(starts), n_failed=failed)


def check_s_minus_empty(config: cm.ProblemConfig) -> SMinusRecord:
    """The all-negative shifted region never meets the feasible space.

    Feasibility pins the last dual component to 0, so ``sigma_{n-1} + 1 = 1``
    can never be negative.
    """
    probe = np.full(config.n_dual, -2.0)
    probe[-1] = 0.0
    empty = not cm.in_s_minus(config, probe)
    return SMinusRecord(
        empty=empty,
        witness="sigma_{n-1} = 0 contradicts sigma_{n-1} + 1 < 0",
    )
