"""Shared driver for the sweep scripts: load a config, override, run, summarize."""

import argparse
import logging
from pathlib import Path

from relay_ris.experiment import emit_outputs, load_spec, run_experiment

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(config_name: str, description: str):
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--trials", type=int, help="trials per sweep value (default from config)")
    parser.add_argument("--workers", type=int, help="worker processes")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="output directory (default from config)")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    spec = load_spec(CONFIGS / config_name).with_overrides(
        trials=args.trials, workers=args.workers, seed=args.seed, out=args.out)
    rows, aggregates = run_experiment(spec)
    paths = emit_outputs(rows, aggregates, spec)

    width = max(len(s) for s in spec.scenarios)
    print(f"{spec.sweep:>8}  " + "  ".join(f"{s:>{width}}" for s in spec.scenarios) + "   (mean dBm)")
    for value in spec.values:
        cells = []
        for s in spec.scenarios:
            a = [v for k, v in aggregates[s].items() if float(k) == value][0]
            cells.append(f"{a['mean_power_dbm']:>{width}.2f}" if a["mean_power_dbm"] is not None
                         else f"{'n/a':>{width}}")
        print(f"{value:>8}  " + "  ".join(cells))
    print(f"outputs in {paths['results'].parent}")
