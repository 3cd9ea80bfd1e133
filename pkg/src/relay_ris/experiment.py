"""Seeded Monte Carlo sweeps and their on-disk outputs.

Every (sweep value, trial) pair gets its own child seed derived from the
experiment seed, so a trial's channels do not depend on how many other trials
run or in which order. All requested scenarios of one pair share the same
realization.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .channel_model import build_geometry, sample_channels
from .config import SystemConfig, dbm_to_watts, watts_to_dbm
from .phase_search import SearchSettings
from .pipeline import SCENARIOS, solve_scenario

SWEEP_VARIABLES = ("R_th", "K", "d_relay")
CSV_COLUMNS = ("scenario", "sweep_value", "trial", "seed", "feasible", "power_w",
               "power_dbm", "relay_rate", "min_user_rate")
TIMING_COLUMN = "wall_time_s"


def fmt(x) -> str:
    """Round-trip float formatting (17 significant digits at most)."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ExperimentSpec:
    base: SystemConfig
    sweep: str
    values: tuple
    scenarios: tuple = SCENARIOS
    trials: int = 200
    seed: int = 0
    out: str | None = None
    search: SearchSettings = SearchSettings()
    workers: int = 1
    record_timing: bool = False
    name: str = "experiment"

    def __post_init__(self):
        problems = []
        if self.sweep not in SWEEP_VARIABLES:
            problems.append(f"sweep variable must be one of {SWEEP_VARIABLES}, got {self.sweep!r}")
        vals = tuple(self.values)
        if not vals:
            problems.append("sweep values must be nonempty")
        elif any(b <= a for a, b in zip(vals, vals[1:])):
            problems.append("sweep values must be strictly increasing")
        if self.sweep == "K" and any(int(v) != v for v in vals):
            problems.append("K values must be integers")
        unknown = [s for s in self.scenarios if s not in SCENARIOS]
        if unknown or not self.scenarios:
            problems.append(f"scenarios must be a nonempty subset of {SCENARIOS}, got {list(self.scenarios)}")
        if self.trials < 1:
            problems.append(f"trials must be >= 1, got {self.trials}")
        if self.workers < 1:
            problems.append(f"workers must be >= 1, got {self.workers}")
        if problems:
            raise ValueError("; ".join(problems))
        if self.sweep == "K":
            vals = tuple(int(v) for v in vals)
        else:
            vals = tuple(float(v) for v in vals)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        # every swept configuration must itself be valid
        for v in vals:
            self.config_for(v)

    def config_for(self, value) -> SystemConfig:
        return self.base.replace(**{self.sweep: value})

    def with_overrides(self, **kw) -> "ExperimentSpec":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        data = dict(data)
        allowed = {"name", "system", "sweep", "scenarios", "trials", "seed", "output",
                   "search", "workers", "record_timing"}
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"unknown top-level keys: {sorted(unknown)}")
        system = dict(data.get("system") or {})
        if "sigma2_dbm" in system:
            if "sigma2" in system:
                raise ValueError("give either sigma2 or sigma2_dbm, not both")
            system["sigma2"] = dbm_to_watts(float(system.pop("sigma2_dbm")))
        sweep = data.get("sweep")
        if not isinstance(sweep, dict) or set(sweep) != {"variable", "values"}:
            raise ValueError("sweep must be a mapping with exactly 'variable' and 'values'")
        search = dict(data.get("search") or {})
        unknown = set(search) - {f.name for f in fields(SearchSettings)}
        if unknown:
            raise ValueError(f"unknown search keys: {sorted(unknown)}")
        kwargs = dict(
            base=SystemConfig.from_dict(system),
            sweep=sweep["variable"],
            values=tuple(sweep["values"]),
            search=SearchSettings(**search),
        )
        for key, target in (("scenarios", "scenarios"), ("trials", "trials"), ("seed", "seed"),
                            ("output", "out"), ("workers", "workers"),
                            ("record_timing", "record_timing"), ("name", "name")):
            if key in data:
                kwargs[target] = tuple(data[key]) if key == "scenarios" else data[key]
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "system": self.base.to_dict(),
            "sweep": {"variable": self.sweep, "values": list(self.values)},
            "scenarios": list(self.scenarios),
            "trials": self.trials,
            "seed": self.seed,
            "output": self.out,
            "search": asdict(self.search),
            "workers": self.workers,
            "record_timing": self.record_timing,
        }


def load_spec(path) -> ExperimentSpec:
    """Read an experiment file (YAML; JSON is accepted as a subset)."""
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping at top level")
    return ExperimentSpec.from_dict(data)


@dataclass
class ResultRow:
    scenario: str
    sweep_value: float
    trial: int
    seed: int
    feasible: bool
    power_w: float
    power_dbm: float
    relay_rate: float
    min_user_rate: float
    wall_time_s: float = field(default=float("nan"), compare=False)


def child_seed(seed: int, value_index: int, trial: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(value_index, trial))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_trial(spec: ExperimentSpec, value_index: int, trial: int) -> list[ResultRow]:
    value = spec.values[value_index]
    config = spec.config_for(value)
    seed = child_seed(spec.seed, value_index, trial)
    rng = np.random.default_rng(seed)
    geometry = build_geometry(config, rng)
    channels = sample_channels(geometry, config, rng)
    rows = []
    for scenario in spec.scenarios:
        t0 = time.perf_counter()
        report = solve_scenario(scenario, channels, config, spec.search)
        elapsed = time.perf_counter() - t0
        power = report.total_power if report.feasible else math.inf
        rows.append(ResultRow(
            scenario=scenario, sweep_value=value, trial=trial, seed=seed,
            feasible=report.feasible, power_w=power, power_dbm=watts_to_dbm(power),
            relay_rate=report.relay_rate, min_user_rate=report.min_user_rate,
            wall_time_s=elapsed,
        ))
    return rows


def _run_task(args):
    spec, vi, t = args
    return run_trial(spec, vi, t)


def aggregate(rows: list[ResultRow], spec: ExperimentSpec) -> dict:
    """Mean power over feasible trials and the feasible fraction per (scenario, value)."""
    out = {}
    for scenario in spec.scenarios:
        per_value = {}
        for value in spec.values:
            sel = [r for r in rows if r.scenario == scenario and r.sweep_value == value]
            ok = [r.power_w for r in sel if r.feasible]
            mean = float(np.mean(ok)) if ok else None
            per_value[fmt(value)] = {
                "mean_power_w": mean,
                "mean_power_dbm": watts_to_dbm(mean) if mean is not None else None,
                "feasible_fraction": len(ok) / len(sel) if sel else 0.0,
                "n_trials": len(sel),
                "n_feasible": len(ok),
            }
        out[scenario] = per_value
    return out


def run_experiment(spec: ExperimentSpec, progress=None):
    """Run every (value, trial) pair; returns ``(rows, aggregates)``.

    Rows come back ordered by value, trial and scenario regardless of
    ``spec.workers``.
    """
    tasks = [(spec, vi, t) for vi in range(len(spec.values)) for t in range(spec.trials)]
    rows = []
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            for chunk in pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * spec.workers))):
                rows.extend(chunk)
                if progress:
                    progress(len(rows) // len(spec.scenarios), len(tasks))
    else:
        for task in tasks:
            rows.extend(_run_task(task))
            if progress:
                progress(len(rows) // len(spec.scenarios), len(tasks))
    return rows, aggregate(rows, spec)


def _columns(record_timing: bool):
    return CSV_COLUMNS + ((TIMING_COLUMN,) if record_timing else ())


def rows_to_csv(rows: list[ResultRow], record_timing: bool = False) -> str:
    buf = io.StringIO()
    cols = _columns(record_timing)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        writer.writerow([r.scenario if c == "scenario" else fmt(getattr(r, c)) for c in cols])
    return buf.getvalue()


def read_rows_csv(path) -> list[ResultRow]:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(ResultRow(
                scenario=rec["scenario"],
                sweep_value=float(rec["sweep_value"]),
                trial=int(rec["trial"]),
                seed=int(rec["seed"]),
                feasible=rec["feasible"] == "true",
                power_w=float(rec["power_w"]),
                power_dbm=float(rec["power_dbm"]),
                relay_rate=float(rec["relay_rate"]),
                min_user_rate=float(rec["min_user_rate"]),
                wall_time_s=float(rec.get(TIMING_COLUMN, "nan")),
            ))
    return rows


def plot_table(aggregates: dict, spec: ExperimentSpec) -> str:
    """Sweep value against mean power of every scenario, as CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = [spec.sweep]
    for s in spec.scenarios:
        header += [f"{s}_mean_power_w", f"{s}_mean_power_dbm", f"{s}_feasible_fraction"]
    writer.writerow(header)
    for value in spec.values:
        line = [fmt(value)]
        for s in spec.scenarios:
            a = aggregates[s][fmt(value)]
            line += ["" if a["mean_power_w"] is None else fmt(a["mean_power_w"]),
                     "" if a["mean_power_dbm"] is None else fmt(a["mean_power_dbm"]),
                     fmt(a["feasible_fraction"])]
        writer.writerow(line)
    return buf.getvalue()


def _json_safe(x):
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def emit_outputs(rows: list[ResultRow], aggregates: dict, spec: ExperimentSpec, out_dir=None) -> dict:
    """Write ``results.csv``, ``aggregates.json``, ``plot_data.csv`` and ``spec.json``."""
    out_dir = Path(out_dir or spec.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "results": out_dir / "results.csv",
        "aggregates": out_dir / "aggregates.json",
        "plot_data": out_dir / "plot_data.csv",
        "spec": out_dir / "spec.json",
    }
    paths["results"].write_text(rows_to_csv(rows, spec.record_timing))
    paths["aggregates"].write_text(json.dumps(
        {"sweep": spec.sweep, "scenarios": _json_safe(aggregates)}, indent=2) + "\n")
    paths["plot_data"].write_text(plot_table(aggregates, spec))
    paths["spec"].write_text(json.dumps(spec.to_dict(), indent=2) + "\n")
    return paths
