"""Impact metrics for an optimized fleet schedule.

Per zone: the peak ratio (with-EV peak over original peak, percent) and the
energy ratio (zone share of the fleet's net charged energy, percent).  Per
EV: cost and the discharged/charged energy ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gridsched.model import GridschedError, ScenarioConfig
from gridsched.schedule import ChargeSchedule


class UndefinedMetricError(GridschedError):
    def __init__(self, message: str, metric: str, where: str | None = None):
        super().__init__(message)
        self.metric = metric
        self.where = where


def demand_profile(schedule: ChargeSchedule, config: ScenarioConfig) -> np.ndarray:
    """Zone demand with EVs, ``[zone, t]`` in kW."""
    b = config.presence.presence.astype(float)
    ev_load = np.einsum("izt,it->zt", b, schedule.power) if b.size else 0.0
    return config.local_demand + ev_load


def peak_ratio(m, l, zone_ids=None) -> np.ndarray:
    """``100 * max(m) / max(l)`` along the last axis."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    l = np.atleast_2d(np.asarray(l, dtype=float))
    orig = l.max(axis=-1)
    bad = np.flatnonzero(orig <= 0)
    if bad.size:
        name = zone_ids[bad[0]] if zone_ids is not None else str(bad[0])
        raise UndefinedMetricError(f"zone {name} has no original peak demand", "peak_ratio", name)
    return 100.0 * m.max(axis=-1) / orig


def net_energy_by_zone(schedule: ChargeSchedule, config: ScenarioConfig) -> np.ndarray:
    b = config.presence.presence.astype(float)
    if not b.size:
        return np.zeros(len(config.zones))
    return np.einsum("izt,it->z", b, schedule.power) * schedule.dt_hours


def energy_ratio(schedule: ChargeSchedule, config: ScenarioConfig) -> np.ndarray:
    """Zone share (percent) of net EV energy; a net-exporting zone comes out negative."""
    net = net_energy_by_zone(schedule, config)
    total = net.sum()
    if not total > 1e-9:
        raise UndefinedMetricError(f"fleet net energy use is {total:.3g} kWh; energy ratio undefined",
                                   "energy_ratio")
    return 100.0 * net / total


def discharged_charged_ratio(schedule: ChargeSchedule) -> np.ndarray:
    charged = schedule.charge.sum(axis=1)
    discharged = schedule.discharge.sum(axis=1)
    out = np.zeros_like(charged)
    pos = charged > 0
    out[pos] = np.abs(discharged[pos]) / charged[pos]
    return out


@dataclass
class ImpactReport:
    zone_ids: list[str]
    ev_ids: list[str]
    currency: str
    demand_profile: np.ndarray  # m[zone, t]
    local_demand: np.ndarray  # l[zone, t]
    power_cap: np.ndarray
    peak_ratio: np.ndarray  # percent per zone
    energy_ratio: np.ndarray  # percent per zone
    net_energy_kwh: np.ndarray
    original_peak: np.ndarray
    original_peak_interval: np.ndarray
    new_peak: np.ndarray
    new_peak_interval: np.ndarray
    exporting: np.ndarray  # zone total demand drops below zero somewhere
    total_cost: float
    per_ev_cost: np.ndarray
    charged_kwh: np.ndarray
    discharged_kwh: np.ndarray
    discharged_charged_ratio: np.ndarray

    def zone_rows(self) -> list[dict]:
        return [
            {
                "zone_id": z,
                "peak_ratio_pct": float(self.peak_ratio[k]),
                "energy_ratio_pct": float(self.energy_ratio[k]),
                "net_ev_energy_kwh": float(self.net_energy_kwh[k]),
                "original_peak_kw": float(self.original_peak[k]),
                "original_peak_interval": int(self.original_peak_interval[k]),
                "new_peak_kw": float(self.new_peak[k]),
                "new_peak_interval": int(self.new_peak_interval[k]),
                "exports": bool(self.exporting[k]),
            }
            for k, z in enumerate(self.zone_ids)
        ]

    def ev_rows(self) -> list[dict]:
        return [
            {
                "ev_id": e,
                "cost": float(self.per_ev_cost[k]),
                "charged_kwh": float(self.charged_kwh[k]),
                "discharged_kwh": float(self.discharged_kwh[k]),
                "discharged_charged_ratio": float(self.discharged_charged_ratio[k]),
            }
            for k, e in enumerate(self.ev_ids)
        ]

    def to_dict(self) -> dict:
        return {
            "currency": self.currency,
            "total_cost": float(self.total_cost),
            "zones": self.zone_rows(),
            "evs": self.ev_rows(),
        }


def build_report(schedule: ChargeSchedule, config: ScenarioConfig) -> ImpactReport:
    m = demand_profile(schedule, config)
    l = config.local_demand
    ids = config.zone_ids
    mu = peak_ratio(m, l, ids)
    xi = energy_ratio(schedule, config)
    return ImpactReport(
        zone_ids=ids,
        ev_ids=list(schedule.ev_ids),
        currency=config.currency,
        demand_profile=m,
        local_demand=l,
        power_cap=config.power_cap,
        peak_ratio=mu,
        energy_ratio=xi,
        net_energy_kwh=net_energy_by_zone(schedule, config),
        original_peak=l.max(axis=1),
        original_peak_interval=l.argmax(axis=1),
        new_peak=m.max(axis=1),
        new_peak_interval=m.argmax(axis=1),
        exporting=(m < 0).any(axis=1),
        total_cost=schedule.total_cost,
        per_ev_cost=schedule.per_ev_cost,
        charged_kwh=schedule.charged_kwh,
        discharged_kwh=schedule.discharged_kwh,
        discharged_charged_ratio=discharged_charged_ratio(schedule),
    )
