"""Dimension sweeps of primal and dual solves, with tabular output."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import core_model as cm
from . import parallel_eval as pe
from .solvers import Method, SolverConfig, SolverError, solve_dual, solve_primal

log = logging.getLogger(__name__)

TABLE_DIMS = list(range(2, 11)) + list(range(20, 101, 10)) + list(range(200, 1001, 100))
EXTENDED_DIMS = [2000, 3000, 4000]
SEED2_BOX = (-500.0, 500.0)

COLUMNS = (
    "dimension",
    "problem",
    "seed",
    "solver",
    "iterations",
    "function_calls",
    "objective_value",
    "solution_error",
    "gap",
    "wall_time_ms",
)


def parse_dims(text: str) -> list[int]:
    """``"2..10,20,50"`` -> ``[2, 3, ..., 10, 20, 50]`` (sorted, unique)."""
    dims: set[int] = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = (int(v) for v in part.split("..", 1))
            if lo > hi:
                raise ValueError(f"empty range {part!r}")
            dims.update(range(lo, hi + 1))
        else:
            dims.add(int(part))
    if not dims:
        raise ValueError("no dimensions given")
    if min(dims) < 2:
        raise ValueError("dimensions must be >= 2")
    return sorted(dims)


def expand_pattern(pattern: str, length: int) -> np.ndarray:
    """Expand ``"-1.0005,1.0005*"`` to a vector of ``length`` entries.

    Comma-separated values are taken literally; one value may carry a trailing
    ``*`` and is then repeated to fill the remaining length.
    """
    tokens = [t.strip() for t in pattern.split(",") if t.strip()]
    starred = [i for i, t in enumerate(tokens) if t.endswith("*")]
    if len(starred) > 1:
        raise ValueError("at most one fill value (marked with *) is allowed")
    if not starred:
        if len(tokens) != length:
            raise ValueError(f"pattern has {len(tokens)} values, need {length}")
        return np.array([float(t) for t in tokens])
    i = starred[0]
    head = [float(t) for t in tokens[:i]]
    tail = [float(t) for t in tokens[i + 1 :]]
    fill = length - len(head) - len(tail)
    if fill < 0:
        raise ValueError(f"pattern has more than {length} fixed values")
    return np.array(head + [float(tokens[i][:-1])] * fill + tail)


@dataclass(frozen=True)
class ExperimentSpec:
    dims: Sequence[int]
    big_n: float = 100.0
    problem: str = "both"  # primal | dual | both
    seed_kind: str = "seed1"  # seed1 | seed2 | custom:<pattern>
    solver: Method = Method.PATTERN_SEARCH
    solver_cfg: Optional[SolverConfig] = None
    parallel_workers: int = 1
    feasibility: str = "reject"
    initial_step: Optional[float] = None

    def __post_init__(self):
        if self.problem not in ("primal", "dual", "both"):
            raise ValueError(f"unknown problem {self.problem!r}")
        if not (self.seed_kind in ("seed1", "seed2") or self.seed_kind.startswith("custom:")):
            raise ValueError(f"unknown seed {self.seed_kind!r}")
        object.__setattr__(self, "solver", Method(self.solver))

    @property
    def problems(self) -> list[str]:
        return ["primal", "dual"] if self.problem == "both" else [self.problem]

    @property
    def seed_label(self) -> str:
        return "custom" if self.seed_kind.startswith("custom:") else self.seed_kind


def primal_start(n: int, seed_kind: str) -> np.ndarray:
    if seed_kind == "seed1":
        return np.full(n, 3.0)
    if seed_kind == "seed2":
        return np.full(n, 100.0)
    return expand_pattern(seed_kind.split(":", 1)[1], n)


def dual_start(n: int, seed_kind: str) -> np.ndarray:
    if seed_kind == "seed1":
        sigma = np.full(n - 1, -2.0 / 3.0)
    elif seed_kind == "seed2":
        sigma = np.full(n - 1, 100.0)
    else:
        sigma = expand_pattern(seed_kind.split(":", 1)[1], n - 1)
    sigma[-1] = 0.0
    return sigma


PRIMAL_STEP = 1.0
DUAL_STEP = 0.1


def default_solver_cfg(
    problem: str, seed_kind: str, base: Optional[SolverConfig] = None, initial_step: Optional[float] = None
) -> SolverConfig:
    """Solver settings for one run: per-problem initial step, seed2 box for the primal."""
    cfg = base or SolverConfig()
    if initial_step is None:
        # the dual optimum sits close to the seed1 start; small steps stay off the pole
        initial_step = DUAL_STEP if problem == "dual" else PRIMAL_STEP
    cfg = replace(cfg, initial_step=initial_step)
    if problem == "primal" and seed_kind == "seed2":
        cfg = replace(cfg, box_lower=SEED2_BOX[0], box_upper=SEED2_BOX[1])
    return cfg


@dataclass
class ResultRow:
    dimension: int
    problem: str
    seed: str
    solver: str
    iterations: int
    function_calls: int
    objective_value: float
    solution_error: float
    gap: Optional[float]
    wall_time_ms: float
    termination: str = ""
    final_point: Optional[np.ndarray] = None


def run_one(spec: ExperimentSpec, n: int, problem: str) -> ResultRow:
    config = cm.ProblemConfig(n, spec.big_n)
    cfg = default_solver_cfg(problem, spec.seed_kind, spec.solver_cfg, spec.initial_step)
    primal_eval, dual_eval = pe.evaluators(spec.parallel_workers)
    row = ResultRow(
        dimension=n,
        problem=problem,
        seed=spec.seed_label,
        solver=spec.solver.value,
        iterations=0,
        function_calls=0,
        objective_value=math.nan,
        solution_error=math.nan,
        gap=math.nan if problem == "dual" else None,
        wall_time_ms=0.0,
    )
    try:
        if problem == "primal":
            report = solve_primal(
                config, primal_start(n, spec.seed_kind), cfg, spec.solver, evaluate=primal_eval
            )
            row.solution_error = float(np.max(np.abs(report.final_point - 1.0)))
        else:
            report = solve_dual(
                config,
                dual_start(n, spec.seed_kind),
                cfg,
                spec.solver,
                feasibility=spec.feasibility,
                evaluate=dual_eval,
            )
            row.solution_error = float(np.max(np.abs(report.final_point)))
            row.gap = cm.duality_gap(config, report.final_point).gap
    except (SolverError, cm.PoleError, ValueError) as exc:
        log.warning("n=%d %s failed: %s", n, problem, exc)
        row.termination = type(exc).__name__
        return row
    row.iterations = report.iterations
    row.function_calls = report.function_calls
    row.objective_value = report.final_value
    row.wall_time_ms = report.wall_time_ms
    row.termination = report.termination.value
    row.final_point = report.final_point
    return row


def run_experiment(
    spec: ExperimentSpec,
    out: Optional[os.PathLike] = None,
    fmt: str = "csv",
    jobs: int = 1,
) -> list[ResultRow]:
    """Solve every (dimension, problem) combination of ``spec``.

    Rows come back sorted by dimension, primal before dual, whatever the
    completion order. Solver failures are recorded in ``row.termination``
    and never stop the sweep. With ``out`` set, rows are written atomically.
    """
    tasks = [(n, p) for n in sorted(spec.dims) for p in spec.problems]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda t: run_one(spec, *t), tasks))
    else:
        rows = []
        for n, p in tasks:
            rows.append(run_one(spec, n, p))
            log.info("n=%d %s done: %s", n, p, rows[-1].termination)
    if out is not None:
        write_results(rows, out, fmt)
    return rows


# -- output -------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), "#.10g")
    return str(value)


def row_record(row: ResultRow) -> dict:
    rec = asdict(row)
    return {k: rec[k] for k in COLUMNS}


def render_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        rec = row_record(row)
        writer.writerow([_fmt(rec[k]) for k in COLUMNS])
    return buf.getvalue()


def render_json(rows: Sequence[ResultRow]) -> str:
    records = []
    for row in rows:
        rec = row_record(row)
        for k, v in rec.items():
            if isinstance(v, np.generic):
                rec[k] = v.item()
        records.append(rec)
    return json.dumps(records, indent=2) + "\n"


def write_results(rows: Sequence[ResultRow], path: os.PathLike, fmt: str = "csv") -> None:
    """Write rows as CSV or JSON via a temporary file and an atomic rename."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    text = render_csv(rows) if fmt == "csv" else render_json(rows)
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_results(path: os.PathLike, fmt: Optional[str] = None) -> list[dict]:
    """Read back what :func:`write_results` wrote, as plain dicts."""
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    if fmt == "json":
        return json.loads(path.read_text())
    rows = []
    with path.open(newline="") as fh:
        for rec in csv.DictReader(fh):
            out = {}
            for k, v in rec.items():
                if k in ("dimension", "iterations", "function_calls"):
                    out[k] = int(v)
                elif k in ("problem", "seed", "solver"):
                    out[k] = v
                else:
                    out[k] = None if v == "" else float(v)
            rows.append(out)
    return rows
