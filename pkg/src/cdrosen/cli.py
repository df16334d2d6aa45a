"""Command line entry point: ``cdrosen solve | atlas | verify``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import core_model as cm
from . import critical_points as cp
from . import harness
from . import verification
from .solvers import Method, SolverConfig

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _workers_default() -> int:
    raw = os.environ.get("CDROSEN_WORKERS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"CDROSEN_WORKERS must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError("CDROSEN_WORKERS must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdrosen",
        description="Rosenbrock minimization through its canonical dual.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run a primal/dual dimension sweep")
    solve.add_argument("--problem", choices=["primal", "dual", "both"], default="both")
    solve.add_argument("--dims", default=None, help="e.g. 2..10,20,50 (default: table sweep up to 1000)")
    solve.add_argument("--extended", action="store_true", help="also run n = 2000, 3000, 4000")
    solve.add_argument("--bigN", dest="big_n", type=float, default=100.0)
    solve.add_argument("--seed", default="seed1", help="seed1 | seed2 | custom:<pattern>")
    solve.add_argument("--solver", choices=[m.value for m in Method], default="pattern")
    solve.add_argument("--feasibility", choices=["reject", "penalty"], default="reject")
    solve.add_argument("--tol", type=float, default=1e-8, help="step and gradient tolerance")
    solve.add_argument("--max-iters", type=int, default=100_000)
    solve.add_argument("--max-calls", type=int, default=50_000_000)
    solve.add_argument("--initial-step", type=float, default=None)
    solve.add_argument("--parallel", type=int, default=None, help="partial-sum workers per evaluation")
    solve.add_argument("--jobs", type=int, default=1, help="dimensions solved concurrently")
    solve.add_argument("--out", type=Path, default=None)
    solve.add_argument("--format", choices=["csv", "json"], default=None)
    solve.add_argument("--rng-seed", type=int, default=42, help="accepted for symmetry; the sweep is deterministic")

    atlas = sub.add_parser("atlas", help="enumerate and classify critical points")
    atlas.add_argument("--n", type=int, required=True)
    atlas.add_argument("--bigN", dest="big_n", type=float, default=100.0)
    atlas.add_argument("--starts", type=int, default=200)
    atlas.add_argument("--rng-seed", type=int, default=42)
    atlas.add_argument("--out", type=Path, default=None)

    verify = sub.add_parser("verify", help="run the identity and property suites")
    verify.add_argument("--scope", choices=["all", *verification.SUITES], default="all")
    verify.add_argument("--samples", type=int, default=None)
    verify.add_argument("--rng-seed", type=int, default=42)
    return parser


def _print_rows(rows):
    head = f"{'n':>6} {'problem':<7} {'iters':>7} {'calls':>10} {'objective':>16} {'error':>10} {'termination'}"
    print(head)
    for r in rows:
        print(
            f"{r.dimension:>6} {r.problem:<7} {r.iterations:>7} {r.function_calls:>10} "
            f"{r.objective_value:>16.8f} {r.solution_error:>10.2e} {r.termination}"
        )


def cmd_solve(args) -> int:
    if args.dims:
        try:
            dims = harness.parse_dims(args.dims)
        except ValueError as exc:
            raise UsageError(f"--dims: {exc}") from None
    else:
        dims = list(harness.TABLE_DIMS)
    if args.extended:
        dims = sorted(set(dims) | set(harness.EXTENDED_DIMS))
    workers = args.parallel if args.parallel is not None else _workers_default()
    if workers < 1:
        raise UsageError("--parallel must be >= 1")
    if args.seed.startswith("custom:"):
        try:
            harness.expand_pattern(args.seed.split(":", 1)[1], max(2, min(dims)) - 1)
        except ValueError as exc:
            raise UsageError(f"--seed: {exc}") from None
    try:
        cfg = SolverConfig(
            max_iterations=args.max_iters,
            max_function_calls=args.max_calls,
            step_tolerance=args.tol,
            gradient_tolerance=args.tol,
        )
        spec = harness.ExperimentSpec(
            dims=dims,
            big_n=args.big_n,
            problem=args.problem,
            seed_kind=args.seed,
            solver=Method(args.solver),
            solver_cfg=cfg,
            parallel_workers=workers,
            feasibility=args.feasibility,
            initial_step=args.initial_step,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    fmt = args.format
    if fmt is None:
        fmt = "json" if args.out is not None and args.out.suffix.lower() == ".json" else "csv"
    rows = harness.run_experiment(spec, out=args.out, fmt=fmt, jobs=args.jobs)
    _print_rows(rows)
    return EXIT_OK


def cmd_atlas(args) -> int:
    try:
        config = cm.ProblemConfig(args.n, args.big_n)
        atlas = cp.enumerate_critical_points(config, args.starts, args.rng_seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(f"n={config.n} starts={atlas.n_starts} failed={atlas.n_failed} distinct={len(atlas.pairs)}")
    print(f"{'class':<10} {'region':<6} {'primal':>14} {'dual':>14} {'gap':>10} {'x1':>10}")
    for p in atlas.pairs:
        print(
            f"{p.primal_class.value:<10} {p.region.value:<6} {p.primal_value:>14.8f} "
            f"{p.dual_value:>14.8f} {p.gap:>10.2e} {p.x[0]:>10.6f}"
        )
    if args.out is not None:
        records = [
            {
                "sigma": p.sigma.tolist(),
                "x": p.x.tolist(),
                "primal_value": p.primal_value,
                "dual_value": p.dual_value,
                "xi_value": p.xi_value,
                "gap": p.gap,
                "residual": p.residual,
                "region": p.region.value,
                "primal_class": p.primal_class.value,
                "min_eigenvalue": p.min_eigenvalue,
            }
            for p in atlas.pairs
        ]
        args.out.write_text(json.dumps(records, indent=2) + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.samples is not None and args.samples < 1:
        raise UsageError("--samples must be >= 1")
    results = verification.run(args.scope, args.samples, args.rng_seed)
    for res in results:
        print(res.line())
    failed = [r.name for r in results if not r.ok]
    print("all suites passed" if not failed else f"failed: {', '.join(failed)}")
    return EXIT_OK if not failed else EXIT_VERIFY_FAILED


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    np.seterr(all="ignore")
    handler = {"solve": cmd_solve, "atlas": cmd_atlas, "verify": cmd_verify}[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        print(f"cdrosen: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
