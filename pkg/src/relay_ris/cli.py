"""Command-line entry point: ``relay-ris {run,sweep,validate}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .config import SystemConfig, dbm_to_watts
from .experiment import SWEEP_VARIABLES, ExperimentSpec, emit_outputs, load_spec, run_experiment
from .phase_search import SearchSettings
from .pipeline import SCENARIOS

log = logging.getLogger("relay_ris")


def _common(p: argparse.ArgumentParser, required_out=False):
    p.add_argument("--seed", type=int, help="experiment seed (overrides the file)")
    p.add_argument("--out", required=required_out, help="output directory (overrides the file)")
    p.add_argument("--trials", type=int, help="Monte Carlo trials per sweep value")
    p.add_argument("--workers", type=int, help="worker processes (default 1)")
    p.add_argument("--timing", action="store_true", help="add a wall_time_s column to results.csv")
    p.add_argument("-q", "--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relay-ris", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment file")
    run.add_argument("spec", help="YAML/JSON experiment file")
    _common(run)

    sweep = sub.add_parser("sweep", help="run a sweep described by flags")
    sweep.add_argument("--var", required=True, choices=SWEEP_VARIABLES)
    sweep.add_argument("--values", required=True, type=float, nargs="+")
    sweep.add_argument("--scenarios", nargs="+", default=list(SCENARIOS), choices=SCENARIOS)
    sweep.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="system parameter override, e.g. --set K=7 --set sigma2_dbm=-94")
    sweep.add_argument("--r", type=int, default=1, help="phases searched jointly per block")
    sweep.add_argument("--rounds", type=int, default=3)
    sweep.add_argument("--improvement-tol", type=float, default=1e-4)
    sweep.add_argument("--name", default="sweep")
    _common(sweep, required_out=True)

    val = sub.add_parser("validate", help="check an experiment file without running it")
    val.add_argument("spec")
    return parser


def _parse_overrides(items) -> dict:
    system = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        system[key.strip()] = float(value)
    if "sigma2_dbm" in system:
        system["sigma2"] = dbm_to_watts(system.pop("sigma2_dbm"))
    return system


def _spec_from_args(args) -> ExperimentSpec:
    if args.command == "run":
        spec = load_spec(args.spec)
    else:
        base = SystemConfig.from_dict(_parse_overrides(args.overrides))
        spec = ExperimentSpec(
            base=base, sweep=args.var, values=tuple(args.values), scenarios=tuple(args.scenarios),
            search=SearchSettings(r=args.r, rounds_max=args.rounds,
                                  improvement_tol=args.improvement_tol),
            name=args.name,
        )
    spec = spec.with_overrides(seed=args.seed, out=args.out, trials=args.trials, workers=args.workers)
    if args.timing:
        spec = replace(spec, record_timing=True)
    return spec


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO,
                        format="%(message)s")
    try:
        if args.command == "validate":
            spec = load_spec(args.spec)
            print(f"{args.spec}: ok ({spec.sweep} x {len(spec.values)} values, "
                  f"{len(spec.scenarios)} scenarios, {spec.trials} trials)")
            return 0
        spec = _spec_from_args(args)
    except (OSError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    def progress(done, total):
        if done == total or done % max(1, total // 20) == 0:
            log.info("%d/%d trials", done, total)

    log.info("running %s: %s over %s, %d trials, scenarios %s", spec.name, spec.sweep,
             list(spec.values), spec.trials, ", ".join(spec.scenarios))
    rows, aggregates = run_experiment(spec, progress=progress)
    try:
        paths = emit_outputs(rows, aggregates, spec)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 1
    for kind, path in paths.items():
        log.info("wrote %s: %s", kind, path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
