"""Command line interface.

    perelman-nspace run <config> [--out DIR] [--threads K]
    perelman-nspace verify <config> [--out DIR] [--threads K]
    perelman-nspace sweep <config> --quantity NAME [--out DIR] [--threads K]

Exit codes: 0 success, 1 criterion failure, 2 config error,
3 numerical-solver error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import checks, runner
from .asymptotics import fit_rate
from .config import load_config
from .errors import ConfigurationError, DegenerateFitError, NSpaceError

EXIT_OK, EXIT_CRITERION, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def _parser():
    p = argparse.ArgumentParser(prog="perelman-nspace", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "compute all (N, lambda) cells and write CSV + summary"),
        ("verify", "run and evaluate every pass/fail criterion"),
        ("sweep", "tabulate one quantity over the ladder"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", type=Path)
        sp.add_argument("--out", type=Path, default=Path("out"))
        sp.add_argument("--threads", type=int, default=1, help="parallelism only; results do not change")
        if name == "sweep":
            sp.add_argument("--quantity", required=True, choices=runner.SWEEP_QUANTITIES)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _cmd_run(cfg, args):
    report = runner.run(cfg, threads=args.threads)
    csv_path, summary_path = runner.write_report(report, cfg, args.out)
    print(f"wrote {csv_path} and {summary_path} ({len(report.rows)} rows)")
    for err in report.errors:
        print(f"cell N={err['N']} lambda={err['lambda']:g} failed: {err['error']}: {err['message']}")
    return EXIT_SOLVER if report.errors else EXIT_OK


def _cmd_verify(cfg, args):
    report = runner.run(cfg, threads=args.threads)
    report.criteria = checks.evaluate(cfg, report)
    runner.write_report(report, cfg, args.out)
    for c in report.criteria:
        print(c.line())
    failed = report.failed_criteria
    if report.errors:
        print(f"{len(report.errors)} cells failed with solver errors")
        return EXIT_SOLVER
    if failed:
        print("FAILED: " + ", ".join(c.name for c in failed))
        return EXIT_CRITERION
    print(f"all {len(report.criteria)} criteria passed")
    return EXIT_OK


def _cmd_sweep(cfg, args):
    rows = runner.sweep(cfg, args.quantity, threads=args.threads)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"sweep_{args.quantity}.csv"
    path.write_text(runner.rows_to_csv(rows, ("N", "lambda", "value", "reference")))
    print(f"wrote {path}")
    for lam in cfg.lambda_grid:
        sel = [r for r in rows if r["lambda"] == lam]
        ref = sel[0]["reference"]
        ladder = [(r["N"], r["value"]) for r in sel]
        try:
            fit = fit_rate(ladder, None if ref != ref else ref)
            print(f"lambda={lam:g}: limit {fit.limit:.12g} rate {fit.rate:.4f}")
        except DegenerateFitError:
            print(f"lambda={lam:g}: converged to round-off")
        except ValueError as exc:
            print(f"lambda={lam:g}: no fit ({exc})")
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return {"run": _cmd_run, "verify": _cmd_verify, "sweep": _cmd_sweep}[args.command](cfg, args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NSpaceError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
