"""Output files for a solved scenario.

Fixed file names inside a run directory:

==================  =========================================================
schedule.csv        ev_id, interval, power_kw, energy_kwh
schedule.json       per_ev_cost, total_cost
report.json         full ImpactReport (zones, evs, totals)
zones.csv           one row per zone: peak/energy ratios and peak markers
evs.csv             one row per EV: cost, charged/discharged kWh, ratio
plot_<zone>.csv     interval, local_kw, total_kw, cap_kw, is_original_peak, is_new_peak
figures.json        which files back which figure style
==================  =========================================================
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from gridsched.metrics import ImpactReport
from gridsched.model import ScenarioConfig
from gridsched.schedule import ChargeSchedule

ZONE_COLUMNS = ["zone_id", "peak_ratio_pct", "energy_ratio_pct", "net_ev_energy_kwh", "original_peak_kw",
                "original_peak_interval", "new_peak_kw", "new_peak_interval", "exports"]
EV_COLUMNS = ["ev_id", "cost", "charged_kwh", "discharged_kwh", "discharged_charged_ratio"]
PLOT_COLUMNS = ["interval", "local_kw", "total_kw", "cap_kw", "is_original_peak", "is_new_peak"]


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return "" if not np.isfinite(v) else repr(v)
    return v


def _write_rows(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def _dump(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1) + "\n")


def write_schedule(schedule: ChargeSchedule, out: Path) -> None:
    with open(out / "schedule.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ev_id", "interval", "power_kw", "energy_kwh"])
        for i, ev in enumerate(schedule.ev_ids):
            for t in range(schedule.power.shape[1]):
                w.writerow([ev, t, repr(float(schedule.power[i, t])), repr(float(schedule.energy[i, t]))])
    _dump(out / "schedule.json", {
        "per_ev_cost": dict(zip(schedule.ev_ids, map(float, schedule.per_ev_cost))),
        "total_cost": float(schedule.total_cost),
    })


def write_report(report: ImpactReport, config: ScenarioConfig, out: Path) -> None:
    doc = report.to_dict()
    doc.update({
        "scenario": config.name,
        "direction_mode": config.direction_mode.value,
        "price_profile": config.prices.profile_kind.value,
        "cap_policy": {"eta": config.cap_policy.eta,
                       "constrained_zones": config.cap_policy.zone_ids(config.zones)},
    })
    _dump(out / "report.json", doc)
    _write_rows(out / "zones.csv", ZONE_COLUMNS, report.zone_rows())
    _write_rows(out / "evs.csv", EV_COLUMNS, report.ev_rows())
    plots = {}
    for k, z in enumerate(report.zone_ids):
        name = f"plot_{z}.csv"
        plots[z] = name
        rows = [
            {
                "interval": t,
                "local_kw": float(report.local_demand[k, t]),
                "total_kw": float(report.demand_profile[k, t]),
                "cap_kw": float(report.power_cap[k, t]),
                "is_original_peak": t == int(report.original_peak_interval[k]),
                "is_new_peak": t == int(report.new_peak_interval[k]),
            }
            for t in range(report.demand_profile.shape[1])
        ]
        _write_rows(out / name, PLOT_COLUMNS, rows)
    _dump(out / "figures.json", {
        "demand_overlay": {"files": plots, "x": "interval", "series": ["local_kw", "total_kw", "cap_kw"],
                           "markers": {"original_peak": "is_original_peak", "new_peak": "is_new_peak"}},
        "cost_distribution": {"file": "evs.csv", "column": "cost"},
        "discharged_charged_distribution": {"file": "evs.csv", "column": "discharged_charged_ratio"},
        "metric_table": {"file": "zones.csv", "columns": ["peak_ratio_pct", "energy_ratio_pct"]},
    })


def write_run(schedule: ChargeSchedule, report: ImpactReport, config: ScenarioConfig, out) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_schedule(schedule, out)
    write_report(report, config, out)
    return out
