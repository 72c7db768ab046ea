"""Command-line front end.

    fracgalerkin sweep --problem example1 --kind caputo --s 7/4
    fracgalerkin solve --problem example2 --kind rl --s 3/2 --k 3
    fracgalerkin verify --suite identity
"""

from __future__ import annotations

import argparse
import logging
import sys

from fracgalerkin.config import ConfigError, load_document, parse_config
from fracgalerkin.error_analysis import ConvergenceReport, problem_rate
from fracgalerkin.fe_space import K_MAX, K_MIN
from fracgalerkin.problems import ProblemError
from fracgalerkin.report import emit_table
from fracgalerkin.sweep import SOLVER_ERRORS, SweepError, run_sweep_for, solve_level
from fracgalerkin.verification import SUITES, run_suite

log = logging.getLogger("fracgalerkin")

EXIT_FAILURE = 1
EXIT_USAGE = 2


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML or JSON run configuration")
    p.add_argument("--problem", help="registered problem name or 'custom'")
    p.add_argument("--kind", choices=("rl", "caputo"), help="fractional derivative")
    p.add_argument(
        "--s", action="append", help="order in (1, 2); accepts fractions like 7/4; repeatable"
    )
    p.add_argument("--theta", help="exponent of the right-hand side for example5")
    p.add_argument("--quad-order", type=int, help="Gauss points per quadrature piece")
    p.add_argument("--grading-levels", type=int, help="geometric grading levels at kinks")
    p.add_argument("--newton-tol", help="relative residual tolerance")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    p.add_argument("--out", help="output file (default: standard output)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracgalerkin",
        description="Galerkin finite elements for nonlinear fractional boundary value problems.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="refinement study over k = k_min..k_max")
    _add_run_flags(sweep)
    sweep.add_argument("--k-min", type=int, help=f"first level (>= {K_MIN}, default -1)")
    sweep.add_argument("--k-max", type=int, help=f"last level (<= {K_MAX}, default 5)")

    solve = sub.add_parser("solve", help="single solve at one refinement level")
    _add_run_flags(solve)
    solve.add_argument("--k", type=int, default=3, help="refinement level (default 3)")

    verify = sub.add_parser("verify", help="oracle and identity checks")
    verify.add_argument(
        "--suite",
        action="append",
        choices=sorted(SUITES),
        help="suite to run; repeatable (default: all)",
    )
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    o: dict = {}
    for key in ("problem", "kind"):
        if getattr(args, key) is not None:
            o[key] = getattr(args, key)
    if args.s:
        o["s"] = args.s
    if args.theta is not None:
        o["params"] = {"theta": args.theta}
    if getattr(args, "k_min", None) is not None:
        o["k_min"] = args.k_min
    if getattr(args, "k_max", None) is not None:
        o["k_max"] = args.k_max
    if getattr(args, "k", None) is not None:
        o["k_min"] = o["k_max"] = args.k
    quad = {}
    if args.quad_order is not None:
        quad["order"] = args.quad_order
    if args.grading_levels is not None:
        quad["levels"] = args.grading_levels
    if quad:
        o["quadrature"] = quad
    if args.newton_tol is not None:
        o["newton"] = {"tol": args.newton_tol}
    out = {}
    if args.format is not None:
        out["format"] = args.format
    if args.out is not None:
        out["path"] = args.out
    if out:
        o["output"] = out
    return o


def _run(args: argparse.Namespace) -> int:
    doc = load_document(args.config) if args.config else {}
    cfg = parse_config(doc, _overrides(args))
    # build every problem first so invalid kinds are rejected before any solve
    problems = [cfg.make_problem(s) for s in cfg.s_values]

    reports: list[ConvergenceReport] = []
    status = 0
    for problem in problems:
        if args.command == "solve":
            try:
                level = solve_level(problem, cfg.k_min, cfg.quad, cfg.newton)
            except SOLVER_ERRORS as exc:
                log.error("%s s=%g: %s", problem.name, problem.s, exc)
                return EXIT_FAILURE
            rep = ConvergenceReport(
                problem.name,
                problem.kind.value,
                problem.s,
                problem_rate(problem),
                dict(problem.params),
                [level.result],
            )
        else:
            try:
                rep = run_sweep_for(problem, cfg)
            except SweepError as exc:
                log.error("%s s=%g: %s", problem.name, problem.s, exc)
                rep = exc.report
                status = EXIT_FAILURE
        if not rep.converged:
            status = EXIT_FAILURE
        reports.append(rep)
        if status:
            break

    if any(r.rows for r in reports):
        emit_table([r for r in reports if r.rows], cfg.format, cfg.out, cfg.to_dict())
    return status


def _verify(args: argparse.Namespace) -> int:
    failed = 0
    for name in args.suite or list(SUITES):
        print(f"== {name}")
        for res in run_suite(name):
            print(res.line())
            failed += not res.passed
    return EXIT_FAILURE if failed else 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "verify":
            return _verify(args)
        return _run(args)
    except (ConfigError, ProblemError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
