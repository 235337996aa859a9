"""Re-check a schedule against the scheduling constraints from raw arrays.

Works only from the schedule and scenario, never from the LP, so it can
catch model-building mistakes as well as solver ones.
"""

from __future__ import annotations

import numpy as np

from gridsched.model import DirectionMode, ScenarioConfig
from gridsched.schedule import ChargeSchedule


def check_schedule(schedule: ChargeSchedule, config: ScenarioConfig, tol: float = 1e-6) -> list[str]:
    """Return a list of violated constraints (empty when all hold within ``tol``)."""
    problems = []
    dt = config.grid.dt_hours
    b = config.presence.presence
    d = config.presence.driving_consumption
    conn = b.any(axis=1)
    p = schedule.power
    e = schedule.energy
    for i, ev in enumerate(config.fleet):
        lo = 0.0 if config.direction_mode == DirectionMode.UNI else ev.max_discharge_kw
        if np.any(p[i] > ev.max_charge_kw + tol) or np.any(p[i] < lo - tol):
            problems.append(f"{ev.id}: power outside [{lo}, {ev.max_charge_kw}]")
        if np.any(np.abs(p[i][~conn[i]]) > tol):
            problems.append(f"{ev.id}: power while disconnected")
        prev = np.concatenate([[ev.initial_energy_kwh], e[i, :-1]])
        resid = e[i] - (prev + p[i] * dt - d[i])
        if np.any(np.abs(resid) > tol):
            problems.append(f"{ev.id}: energy recurrence off by {np.abs(resid).max():.3g}")
        if np.any(e[i] < -tol) or np.any(e[i] > ev.battery_capacity_kwh + tol):
            problems.append(f"{ev.id}: energy outside [0, capacity]")
        final = ev.initial_energy_kwh + np.sum(p[i] * dt - d[i])
        if final < ev.target_energy_kwh - tol:
            problems.append(f"{ev.id}: final energy {final:.6g} below target {ev.target_energy_kwh}")
    if config.direction_mode == DirectionMode.UNI and np.any(schedule.discharge > tol):
        problems.append("discharge in uni-directional mode")
    load = np.einsum("izt,it->zt", b.astype(float), p) if b.size else np.zeros((len(config.zones), p.shape[1]))
    for k, zone in enumerate(config.zones):
        over = config.local_demand[k] + load[k] - zone.power_cap
        if np.any(over > tol):
            t = int(np.argmax(over))
            problems.append(f"zone {zone.id}: cap exceeded by {over[t]:.3g} at t={t}")
    return problems
