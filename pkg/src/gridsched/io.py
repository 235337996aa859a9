"""JSON/CSV readers and writers for scenarios and generator configs.

A scenario document mirrors :class:`ScenarioConfig` field for field.
Infinite caps are written as ``null``.  Demand and price arrays may instead
be ``{"csv": "file.csv"}``: one column per zone (header = zone ids), one row
per interval, path relative to the referencing document.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from gridsched.generator import GeneratorConfig, ZoneSpec
from gridsched.model import (
    CapPolicy,
    ConfigError,
    EvSpec,
    PresenceSchedule,
    PriceSchedule,
    ScenarioConfig,
    TimeGrid,
    Zone,
)

SCENARIO_FORMAT = "gridsched-scenario/1"


def _require(doc: dict, key: str, where: str = ""):
    name = f"{where}{key}"
    if not isinstance(doc, dict) or key not in doc:
        raise ConfigError(name, "missing")
    return doc[key]


def _nullable(values) -> list:
    arr = np.asarray(values, dtype=float)
    out = arr.tolist()
    if np.all(np.isfinite(arr)):
        return out
    return _replace_inf(out)


def _replace_inf(obj):
    if isinstance(obj, list):
        return [_replace_inf(v) for v in obj]
    return None if obj is not None and not np.isfinite(obj) else obj


def _from_nullable(values, field: str) -> np.ndarray:
    try:
        arr = np.array(values, dtype=object)
        arr[arr == None] = np.inf  # noqa: E711
        return arr.astype(float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(field, f"not a numeric array ({exc})") from None


def read_zone_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [list(map(float, r)) for r in reader if r]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {h.strip(): data[:, k] for k, h in enumerate(header)}


def _array(value, field: str, base: Path, zone_ids: list[str], column: str | None = None) -> np.ndarray:
    if isinstance(value, dict) and "csv" in value:
        cols = read_zone_csv(base / value["csv"])
        try:
            if column is not None:
                return cols[value.get("column", column)]
            return np.vstack([cols[z] for z in zone_ids])
        except KeyError as exc:
            raise ConfigError(field, f"CSV {value['csv']} lacks column {exc}") from None
    return _from_nullable(value, field)


def _prices(doc: dict, where: str, base: Path, zone_ids: list[str]) -> PriceSchedule:
    charge = _array(_require(doc, "charge_price", where), where + "charge_price", base, zone_ids)
    dis = doc.get("discharge_price")
    discharge = charge if dis is None else _array(dis, where + "discharge_price", base, zone_ids)
    return PriceSchedule(charge, discharge, doc.get("profile_kind", "RealTime"))


def _prices_doc(p: PriceSchedule) -> dict:
    return {
        "profile_kind": p.profile_kind.value,
        "charge_price": p.charge_price.tolist(),
        "discharge_price": p.discharge_price.tolist(),
    }


def _cap_policy(doc) -> CapPolicy:
    if doc is None:
        return CapPolicy()
    eta = doc.get("eta")
    return CapPolicy(None if eta is None else float(eta), doc.get("constrained_zones", "all"))


def _cap_policy_doc(policy: CapPolicy) -> dict:
    zones = policy.constrained_zones
    return {"eta": policy.eta, "constrained_zones": zones if isinstance(zones, str) else list(zones)}


def scenario_to_dict(config: ScenarioConfig) -> dict:
    return {
        "format": SCENARIO_FORMAT,
        "name": config.name,
        "currency": config.currency,
        "grid": {
            "interval_count": config.grid.interval_count,
            "dt_hours": config.grid.dt_hours,
            "start_label": config.grid.start_label,
        },
        "zones": [
            {"id": z.id, "name": z.name, "local_demand": z.local_demand.tolist(),
             "power_cap": _nullable(z.power_cap)}
            for z in config.zones
        ],
        "prices": _prices_doc(config.prices),
        "price_profiles": {k: _prices_doc(v) for k, v in sorted(config.price_profiles.items())},
        "fleet": [
            {
                "id": ev.id,
                "battery_capacity_kwh": ev.battery_capacity_kwh,
                "initial_energy_kwh": ev.initial_energy_kwh,
                "target_energy_kwh": ev.target_energy_kwh,
                "max_charge_kw": ev.max_charge_kw,
                "max_discharge_kw": ev.max_discharge_kw,
                "user_type": ev.user_type.value,
            }
            for ev in config.fleet
        ],
        "presence": {
            "presence": config.presence.presence.astype(int).tolist(),
            "driving_consumption": config.presence.driving_consumption.tolist(),
        },
        "direction_mode": config.direction_mode.value,
        "cap_policy": _cap_policy_doc(config.cap_policy),
    }


def scenario_from_dict(doc: dict, base: Path = Path(".")) -> ScenarioConfig:
    g = _require(doc, "grid")
    try:
        grid = TimeGrid(int(_require(g, "interval_count", "grid.")), float(_require(g, "dt_hours", "grid.")),
                        g.get("start_label", "Sun 00:00"))
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from None
    zdocs = _require(doc, "zones")
    ids = [str(_require(z, "id", f"zones[{k}].")) for k, z in enumerate(zdocs)]
    zones = []
    for k, z in enumerate(zdocs):
        where = f"zones[{k}]."
        demand = _array(_require(z, "local_demand", where), where + "local_demand", base, ids, column=ids[k])
        cap = z.get("power_cap")
        cap = None if cap is None else _array(cap, where + "power_cap", base, ids, column=ids[k])
        zones.append(Zone(ids[k], z.get("name", ids[k]), demand, cap))
    prices = _prices(_require(doc, "prices"), "prices.", base, ids)
    profiles = {k: _prices(v, f"price_profiles.{k}.", base, ids) for k, v in doc.get("price_profiles", {}).items()}
    fleet = []
    for k, e in enumerate(_require(doc, "fleet")):
        try:
            fleet.append(EvSpec(**e))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"fleet[{k}]", str(exc)) from None
    pres = _require(doc, "presence")
    presence = PresenceSchedule(
        np.array(_require(pres, "presence", "presence."), dtype=bool).reshape(len(fleet), len(zones), grid.interval_count),
        np.array(_require(pres, "driving_consumption", "presence."), dtype=float).reshape(len(fleet), grid.interval_count),
    )
    config = ScenarioConfig(
        grid=grid,
        zones=tuple(zones),
        prices=prices,
        fleet=tuple(fleet),
        presence=presence,
        direction_mode=doc.get("direction_mode", "Bidirectional"),
        price_profiles=profiles,
        currency=doc.get("currency", "AUD"),
        name=doc.get("name", "scenario"),
    )
    policy = _cap_policy(doc.get("cap_policy"))
    if policy.eta is not None:
        return config.with_cap_policy(policy)
    return config.replace(cap_policy=policy)


def generator_from_dict(doc: dict) -> GeneratorConfig:
    kwargs = {}
    for key in ("fleet_size", "rng_seed"):
        if key in doc:
            kwargs[key] = int(doc[key])
    for key in ("user_type_mix", "ev", "direction_mode", "price_profile", "currency", "name"):
        if key in doc:
            kwargs[key] = doc[key]
    kwargs["destination_distribution"] = _require(doc, "destination_distribution")
    kwargs["consumption_matrix"] = tuple(map(tuple, _require(doc, "consumption_matrix")))
    if "zones" in doc:
        kwargs["zones"] = tuple(
            ZoneSpec(str(_require(z, "id", f"zones[{k}].")), z.get("name", z["id"]),
                     z.get("profile", str(z["id"]).lower()), float(z.get("peak_kw", 100.0)))
            for k, z in enumerate(doc["zones"])
        )
    if "grid" in doc:
        g = doc["grid"]
        kwargs["grid"] = TimeGrid(int(g.get("interval_count", 336)), float(g.get("dt_hours", 0.5)),
                                  g.get("start_label", "Sun 00:00"))
    if "cap_policy" in doc:
        kwargs["cap_policy"] = _cap_policy(doc["cap_policy"])
    try:
        return GeneratorConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError("generator", str(exc)) from None


def generator_to_dict(config: GeneratorConfig) -> dict:
    return {
        "name": config.name,
        "fleet_size": config.fleet_size,
        "rng_seed": config.rng_seed,
        "user_type_mix": dict(config.user_type_mix),
        "destination_distribution": {k: list(v) for k, v in config.destination_distribution.items()},
        "consumption_matrix": [list(r) for r in config.consumption_matrix],
        "zones": [{"id": z.id, "name": z.name, "profile": z.profile, "peak_kw": z.peak_kw} for z in config.zones],
        "grid": {"interval_count": config.grid.interval_count, "dt_hours": config.grid.dt_hours,
                 "start_label": config.grid.start_label},
        "ev": dict(config.ev),
        "direction_mode": config.direction_mode,
        "price_profile": config.price_profile,
        "cap_policy": _cap_policy_doc(config.cap_policy),
        "currency": config.currency,
    }


def load_json(path) -> dict:
    path = Path(path)
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON ({exc})") from None


def is_scenario_doc(doc: dict) -> bool:
    return doc.get("format") == SCENARIO_FORMAT


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    doc = load_json(path)
    if not is_scenario_doc(doc):
        raise ConfigError("format", f"expected {SCENARIO_FORMAT!r}")
    return scenario_from_dict(doc, path.parent)


def dumps(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def save_scenario(config: ScenarioConfig, path) -> None:
    Path(path).write_text(dumps(scenario_to_dict(config)))


def config_hash(config: ScenarioConfig) -> str:
    blob = json.dumps(scenario_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def write_presence_csv(config: ScenarioConfig, directory) -> None:
    """``presence.csv`` (ev_id, interval, zone or empty) and ``driving.csv`` (ev_id, interval, kwh)."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    zone_idx = config.presence.zone_index()
    d = config.presence.driving_consumption
    ids = config.zone_ids
    with open(out / "presence.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ev_id", "interval", "zone_id"])
        for i, ev in enumerate(config.fleet):
            for t, z in enumerate(zone_idx[i]):
                w.writerow([ev.id, t, ids[z] if z >= 0 else ""])
    with open(out / "driving.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ev_id", "interval", "consumption_kwh"])
        for i, ev in enumerate(config.fleet):
            for t in range(d.shape[1]):
                w.writerow([ev.id, t, repr(float(d[i, t]))])
