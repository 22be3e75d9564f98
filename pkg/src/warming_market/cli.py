"""Command-line entry points.

    warming-market clear SCENARIO [--out DIR] [--display-sign] [--strict] [--tol X]
    warming-market sweep SCENARIO --y-from Y0 --y-to Y1 [--y-step S] [--workers N] [--out DIR] [--strict]
    warming-market bids [--params YAML] --out FILE
    warming-market kernels [--params YAML] [--horizon H] [--pulse-fraction F] --out FILE
    warming-market verify RESULTS_DIR [--scenario PATH] [--tol X]

Exit status: 0 on success; 1 when ``--strict`` is set and a clear is
infeasible (or a sweep has no feasible Y), when a certificate fails, or when
a sweep's feasibility is not monotone in Y; 2 for usage errors and invalid
inputs.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .auction import ModelError, Status, Tolerances, verify_certificate
from .bids import BidError, write_bid_book
from .desk import GAS_NAMES, default_params_path, desk_scenario
from .kernels import KernelError, load_climate_stub, pulse_difference_kernel, write_kernels_csv
from .scenario import FrontierError, feasibility_frontier, objective_monotone, run_auction, sweep_first_constrained_year
from .serialize import RunManifest, ScenarioError, emit_results, load_scenario, read_stored_result, scenario_inputs

log = logging.getLogger("warming_market")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
INPUT_ERRORS = (ScenarioError, ModelError, KernelError, BidError, FileNotFoundError)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _tolerances(args) -> Tolerances:
    return Tolerances(certificate=args.tol)


def cmd_clear(args) -> int:
    started = _now()
    scenario = load_scenario(args.scenario)
    overrides = {"display_sign": args.display_sign, "tol": args.tol}
    if args.first_constrained_year is not None:
        scenario = scenario.with_first_constrained_year(args.first_constrained_year)
        overrides["first_constrained_year"] = args.first_constrained_year
    run = run_auction(scenario, _tolerances(args))
    r = run.result
    manifest = RunManifest.for_inputs(args.scenario, "clear", overrides, scenario_inputs(args.scenario), started)
    manifest.solve_seconds = {"clear": r.solve_time}
    manifest.finished = _now()
    emit_results(args.out, run=run, config=scenario.config, display_sign=args.display_sign, manifest=manifest)
    if not r.optimal:
        years = [scenario.config.label(t) for t in r.violated_periods]
        print(f"{scenario.label}: {r.status.value}; cap unattainable in {len(years)} period(s), first {years[:1]}")
        return EXIT_FAIL if args.strict else EXIT_OK
    print(f"{scenario.label}: optimal, objective {r.objective!r}, {len(r.q)} bids, {r.solve_time:.2f} s")
    print(run.certificate.summary())
    print(f"results written to {args.out}")
    return EXIT_FAIL if run.flagged else EXIT_OK


def _years(args) -> list[float]:
    if args.y_step <= 0:
        raise ScenarioError("--y-step must be positive")
    n = int(np.floor((args.y_to - args.y_from) / args.y_step + 1e-9)) + 1
    if n < 1:
        return []
    return [float(args.y_from + i * args.y_step) for i in range(n)]


def cmd_sweep(args) -> int:
    started = _now()
    scenario = load_scenario(args.scenario)
    years = _years(args)
    t0 = time.perf_counter()
    records = sweep_first_constrained_year(scenario, years, _tolerances(args), workers=args.workers)
    overrides = {"y_from": args.y_from, "y_to": args.y_to, "y_step": args.y_step, "tol": args.tol}
    manifest = RunManifest.for_inputs(args.scenario, "sweep", overrides, scenario_inputs(args.scenario), started)
    manifest.solve_seconds = {"sweep": time.perf_counter() - t0}
    manifest.finished = _now()
    emit_results(args.out, sweep=records, manifest=manifest)
    for rec in records:
        obj = "" if rec.objective is None else f" objective {rec.objective!r}"
        print(f"Y={rec.Y:g}: {rec.status.value}{obj}")
    try:
        frontier = feasibility_frontier(records, args.y_step)
    except FrontierError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if not objective_monotone(records):
        print("error: objective decreases as Y increases", file=sys.stderr)
        return EXIT_FAIL
    if any(rec.certified is False for rec in records):
        print("error: a feasible clear failed its certificate", file=sys.stderr)
        return EXIT_FAIL
    print(f"{len(records)} records; feasibility frontier: {'none' if frontier is None else f'{frontier:g}'}")
    if frontier is None and args.strict:
        return EXIT_FAIL
    return EXIT_OK


def cmd_bids(args) -> int:
    scenario = desk_scenario(args.params)
    write_bid_book(args.out, scenario.bids)
    print(f"{len(scenario.bids)} bids written to {args.out}")
    return EXIT_OK


def cmd_kernels(args) -> int:
    stub = load_climate_stub(args.params or default_params_path())
    gases = args.gas or [g for g in GAS_NAMES if g in stub.gases]
    kernels = [pulse_difference_kernel(stub, g, args.pulse_fraction, args.horizon, kernel_id=f"w_{g}") for g in gases]
    write_kernels_csv(args.out, kernels)
    print(f"{len(kernels)} kernels over {args.horizon} periods written to {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    out = Path(args.results)
    scenario_path = args.scenario
    overrides = {}
    if scenario_path is None:
        manifest = json.loads((out / "manifest.json").read_text())
        scenario_path = manifest["scenario_path"]
        overrides = manifest.get("overrides", {})
    scenario = load_scenario(scenario_path)
    if overrides.get("first_constrained_year") is not None:
        scenario = scenario.with_first_constrained_year(overrides["first_constrained_year"])
    summary = json.loads((out / "summary.json").read_text())
    if summary["status"] != Status.OPTIMAL.value:
        print(f"stored result is {summary['status']}; nothing to verify")
        return EXIT_OK
    result = read_stored_result(out)
    report = verify_certificate(scenario.model(), result, args.tol)
    print(report.summary())
    if not report.passed:
        print(f"certificate FAILED: {', '.join(report.failures)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="warming-market", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{clear,sweep,bids,kernels,verify}")

    def tol(p):
        p.add_argument("--tol", type=float, default=1e-6, help="certificate tolerance (default 1e-6)")

    p = sub.add_parser("clear", help="clear one auction and write prices, allocations and trajectory")
    p.add_argument("scenario", type=Path)
    p.add_argument("--out", type=Path, default=Path("results/clear"))
    p.add_argument("--display-sign", action="store_true", help="negate prices in prices.csv")
    p.add_argument("--strict", action="store_true", help="exit 1 if the auction is infeasible")
    p.add_argument("--first-constrained-year", type=float, default=None, help="override the scenario caps with 0 from this year")
    tol(p)
    p.set_defaults(func=cmd_clear)

    p = sub.add_parser("sweep", help="clear once per first constrained year")
    p.add_argument("scenario", type=Path)
    p.add_argument("--y-from", type=float, required=True)
    p.add_argument("--y-to", type=float, required=True)
    p.add_argument("--y-step", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("results/sweep"))
    p.add_argument("--strict", action="store_true", help="exit 1 if no Y in the sweep is feasible")
    tol(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bids", help="write the desk bid book generated from a parameter file")
    p.add_argument("--params", type=Path, default=None, help="desk parameter YAML (default: bundled)")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_bids)

    p = sub.add_parser("kernels", help="write pulse-difference kernels from the climate stub")
    p.add_argument("--params", type=Path, default=None, help="YAML with a 'gases' block (default: bundled)")
    p.add_argument("--gas", action="append", help="gas to extract (repeatable; default all)")
    p.add_argument("--horizon", type=int, default=281)
    p.add_argument("--pulse-fraction", type=float, default=0.5)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_kernels)

    p = sub.add_parser("verify", help="re-check the optimality certificate of stored clear results")
    p.add_argument("results", type=Path, help="directory written by 'clear'")
    p.add_argument("--scenario", type=Path, default=None, help="scenario file (default: from manifest.json)")
    tol(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
