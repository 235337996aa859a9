"""Cross-product parameter sweeps over a base scenario or generator config.

Each run is identified by a hash of its fully resolved scenario, so repeated
points (e.g. the uncapped baseline under several zone choices) are solved
once and an interrupted sweep resumes from the runs already on disk.
"""

from __future__ import annotations

import csv
import datetime as _dt
import itertools
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gridsched import io
from gridsched.generator import GeneratorConfig, generate
from gridsched.lp import SolverError
from gridsched.metrics import UndefinedMetricError, build_report
from gridsched.model import CapPolicy, ConfigError, GridschedError, ScenarioConfig
from gridsched.report import write_run
from gridsched.schedule import InfeasibleScenario, NonconvexPriceError, ValidationError, solve_scenario

logger = logging.getLogger(__name__)

AXIS_PARAMETERS = ("eta", "constrained_zones", "price_profile", "direction_mode", "fleet_size", "rng_seed")
GENERATOR_ONLY = ("fleet_size", "rng_seed")

STATUS_EXIT = {"ok": 0, "invalid": 2, "infeasible": 3, "solver_failure": 4}


@dataclass
class SweepSpec:
    base_scenario: Path
    axes: list[tuple[str, list]]
    output_dir: Path
    max_runs: int = 500
    overrides: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    jobs: int | None = None

    def __post_init__(self):
        for k, (param, values) in enumerate(self.axes):
            if param not in AXIS_PARAMETERS:
                raise ConfigError(f"axes[{k}].parameter", f"unknown parameter {param!r}")
            if not values:
                raise ConfigError(f"axes[{k}].values", "empty")
        if self.run_count > self.max_runs:
            raise ConfigError("axes", f"{self.run_count} runs exceed max_runs={self.max_runs}")

    @property
    def run_count(self) -> int:
        return int(np.prod([len(v) for _, v in self.axes])) if self.axes else 1

    def points(self) -> list[dict]:
        names = [p for p, _ in self.axes]
        return [dict(zip(names, combo)) for combo in itertools.product(*[v for _, v in self.axes])]

    @classmethod
    def load(cls, path) -> "SweepSpec":
        path = Path(path)
        doc = io.load_json(path)
        base = Path(io._require(doc, "base_scenario"))
        out = Path(doc.get("output_dir", path.stem + "-out"))
        axes = []
        for k, ax in enumerate(io._require(doc, "axes")):
            axes.append((io._require(ax, "parameter", f"axes[{k}]."), list(io._require(ax, "values", f"axes[{k}]."))))
        return cls(
            base_scenario=base if base.is_absolute() else path.parent / base,
            axes=axes,
            output_dir=out if out.is_absolute() else path.parent / out,
            max_runs=int(doc.get("max_runs", 500)),
            overrides=dict(doc.get("overrides", {})),
            solver=dict(doc.get("solver", {})),
            jobs=doc.get("jobs"),
        )


def _eta(value):
    if value is None or (isinstance(value, str) and value.lower() in ("none", "inf", "unconstrained")):
        return None
    return float(value)


def apply_parameters(config: ScenarioConfig, params: dict) -> ScenarioConfig:
    """Apply scenario-level parameters (everything except fleet_size/rng_seed)."""
    if "direction_mode" in params:
        config = config.replace(direction_mode=params["direction_mode"])
    if "price_profile" in params:
        config = config.with_price_profile(params["price_profile"])
    if "eta" in params or "constrained_zones" in params:
        eta = _eta(params["eta"]) if "eta" in params else config.cap_policy.eta
        zones = params.get("constrained_zones", config.cap_policy.constrained_zones)
        config = config.with_cap_policy(CapPolicy(eta, zones))
    return config


def resolve(base, params: dict) -> ScenarioConfig:
    """Build the scenario for one sweep point from a base scenario or generator config."""
    if isinstance(base, GeneratorConfig):
        import dataclasses

        gen = dataclasses.replace(base, **{k: int(params[k]) for k in GENERATOR_ONLY if k in params})
        config = generate(gen).scenario
    else:
        bad = [k for k in GENERATOR_ONLY if k in params]
        if bad:
            raise ConfigError("axes", f"{bad} need a generator config as base_scenario")
        config = base
    return apply_parameters(config, {k: v for k, v in params.items() if k not in GENERATOR_ONLY})


def load_base(path):
    doc = io.load_json(path)
    if io.is_scenario_doc(doc):
        return io.scenario_from_dict(doc, Path(path).parent)
    return io.generator_from_dict(doc)


def solve_to_dir(config: ScenarioConfig, out: Path, solver: dict) -> dict:
    """Solve one scenario, write its artifacts, return a summary record."""
    record = {"status": "ok", "message": ""}
    try:
        schedule = solve_scenario(config, **solver)
        report = build_report(schedule, config)
    except (ValidationError, NonconvexPriceError, UndefinedMetricError) as exc:
        return {"status": "invalid", "message": str(exc)}
    except InfeasibleScenario as exc:
        return {"status": "infeasible", "message": str(exc)}
    except SolverError as exc:
        return {"status": "solver_failure", "message": str(exc)}
    write_run(schedule, report, config, out)
    record.update({
        "total_cost": float(report.total_cost),
        "peak_ratio": dict(zip(report.zone_ids, map(float, report.peak_ratio))),
        "energy_ratio": dict(zip(report.zone_ids, map(float, report.energy_ratio))),
        "mean_ev_cost": float(np.mean(report.per_ev_cost)) if report.ev_ids else 0.0,
        "mean_discharged_charged_ratio": float(np.mean(report.discharged_charged_ratio)) if report.ev_ids else 0.0,
        "iterations": int(schedule.iterations),
    })
    return record


def _execute(task) -> dict:
    config, out, solver, force = task
    done = out / "result.json"
    if not force and done.exists():
        return json.loads(done.read_text())
    record = solve_to_dir(config, out, solver)
    out.mkdir(parents=True, exist_ok=True)
    done.write_text(json.dumps(record, indent=1) + "\n")
    return record


def default_jobs() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def run_sweep(spec: SweepSpec, jobs: int | None = None, force: bool = False) -> Path:
    """Run every sweep point and write ``summary.csv`` under ``spec.output_dir``."""
    base = load_base(spec.base_scenario)
    out_dir = Path(spec.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    points, rows, tasks, index = spec.points(), [], [], {}
    for params in points:
        merged = {**spec.overrides, **params}
        row = {"params": params}
        try:
            config = resolve(base, merged)
        except GridschedError as exc:
            row.update(run_id="", record={"status": "invalid", "message": str(exc)})
            rows.append(row)
            continue
        run_id = io.config_hash(config)
        row["run_id"] = run_id
        if run_id not in index:
            index[run_id] = len(tasks)
            tasks.append((config, out_dir / f"run-{run_id}", spec.solver, force))
        rows.append(row)

    jobs = jobs or spec.jobs or default_jobs()
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_execute, tasks))
    else:
        results = [_execute(t) for t in tasks]
    zone_ids = []
    for res in results:
        if res.get("peak_ratio"):
            zone_ids = list(res["peak_ratio"])
            break

    params = [p for p, _ in spec.axes]
    columns = (["run_id"] + params + ["status"] + [f"mu_{z}" for z in zone_ids] + [f"xi_{z}" for z in zone_ids]
               + ["total_cost", "mean_ev_cost", "mean_discharged_charged_ratio", "message"])
    summary = out_dir / "summary.csv"
    with open(summary, "w", newline="") as fh:
        fh.write(f"# gridsched sweep generated {_dt.datetime.now().isoformat(timespec='seconds')}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            rec = row.get("record") or results[index[row["run_id"]]]
            vals = [row.get("run_id", "")] + [_cell(row["params"].get(p)) for p in params] + [rec["status"]]
            for key in ("peak_ratio", "energy_ratio"):
                vals += [_cell(rec.get(key, {}).get(z)) for z in zone_ids]
            vals += [_cell(rec.get(k)) for k in ("total_cost", "mean_ev_cost", "mean_discharged_charged_ratio")]
            vals.append(rec.get("message", ""))
            w.writerow(vals)
    return summary


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(map(str, v))
    return v


def read_summary(path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
