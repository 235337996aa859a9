"""Fleet charging LP: build from a scenario, solve, map back to schedules.

Signed power is split as ``p = p_charge - p_discharge`` with both parts
nonnegative.  Charge is billed at the zone's charge price and discharge is
credited at its discharge price, which is exact as a linear program as long
as no discharge price exceeds the matching charge price.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from gridsched.lp import Basis, LinearProgram, LpSolution, LpStatus, solve, warm_start_solve
from gridsched.model import DirectionMode, GridschedError, ScenarioConfig, ValidationReport, validate

logger = logging.getLogger(__name__)


class ValidationError(GridschedError):
    def __init__(self, report: ValidationReport):
        super().__init__("invalid scenario: " + "; ".join(report.violations))
        self.report = report


class NonconvexPriceError(GridschedError):
    """A discharge price above the charge price would need integer variables."""


class InfeasibleScenario(GridschedError):
    def __init__(self, message: str, rows: list[str], evs: list[str], zones: list[str]):
        super().__init__(message)
        self.rows = rows
        self.evs = evs
        self.zones = zones


class ExtractionError(GridschedError):
    def __init__(self, status: LpStatus):
        super().__init__(f"cannot extract a schedule from a {status.value} solution")
        self.status = status


@dataclass(frozen=True)
class VariableMap:
    charge: np.ndarray  # [ev, t] column of p_charge
    discharge: np.ndarray | None  # [ev, t] column of p_discharge; None when uni-directional
    energy: np.ndarray  # [ev, t] column of stored energy at the end of t
    balance_rows: np.ndarray  # [ev, t]
    target_rows: np.ndarray  # [ev]
    cap_rows: np.ndarray  # [zone, t], -1 where the zone is uncapped
    n_vars: int


@dataclass
class ChargeSchedule:
    ev_ids: list[str]
    dt_hours: float
    power: np.ndarray  # signed kW [ev, t]
    charge: np.ndarray  # kW >= 0
    discharge: np.ndarray  # kW >= 0 (magnitude)
    energy: np.ndarray  # kWh at the end of each interval
    per_ev_cost: np.ndarray
    total_cost: float
    objective_value: float
    iterations: int = 0
    basis: Basis | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def charged_kwh(self) -> np.ndarray:
        return self.charge.sum(axis=1) * self.dt_hours

    @property
    def discharged_kwh(self) -> np.ndarray:
        return self.discharge.sum(axis=1) * self.dt_hours


def build_model(config: ScenarioConfig) -> tuple[LinearProgram, VariableMap]:
    prices = config.prices
    if np.any(prices.discharge_price > prices.charge_price):
        z, t = np.argwhere(prices.discharge_price > prices.charge_price)[0]
        raise NonconvexPriceError(
            f"discharge price exceeds charge price in zone {config.zones[z].id} at t={t}; "
            "this pricing needs binary variables and is rejected"
        )
    fleet = config.fleet
    I, T, Z = len(fleet), config.grid.interval_count, len(config.zones)
    dt = config.grid.dt_hours
    bidir = config.direction_mode == DirectionMode.BI
    b = config.presence.presence
    d = config.presence.driving_consumption
    conn = b.any(axis=1)
    zone_of = np.where(conn, np.argmax(b, axis=1), 0)

    IT = I * T
    charge = np.arange(IT).reshape(I, T)
    offset = IT
    discharge = None
    if bidir:
        discharge = offset + np.arange(IT).reshape(I, T)
        offset += IT
    energy = offset + np.arange(IT).reshape(I, T)
    n = offset + IT

    tt = np.arange(T)
    lam = prices.charge_price[zone_of, tt[None, :]]
    eta = prices.discharge_price[zone_of, tt[None, :]]
    c = np.zeros(n)
    c[charge] = np.where(conn, lam * dt, 0.0)
    lower = np.zeros(n)
    upper = np.zeros(n)
    p_max = np.array([ev.max_charge_kw for ev in fleet])[:, None]
    upper[charge] = np.where(conn, p_max, 0.0)
    if bidir:
        c[discharge] = np.where(conn, -eta * dt, 0.0)
        p_min = np.array([abs(ev.max_discharge_kw) for ev in fleet])[:, None]
        upper[discharge] = np.where(conn, p_min, 0.0)
    upper[energy] = np.array([ev.battery_capacity_kwh for ev in fleet])[:, None]

    rows, cols, vals = [], [], []
    senses, rhs, names = [], [], []

    # energy balance: e[t] - e[t-1] - dt*pc + dt*pd = -d[t]
    bal = np.arange(IT).reshape(I, T)
    rows += [bal.ravel(), bal.ravel()]
    cols += [energy.ravel(), charge.ravel()]
    vals += [np.ones(IT), np.full(IT, -dt)]
    rows.append(bal[:, 1:].ravel())
    cols.append(energy[:, :-1].ravel())
    vals.append(-np.ones(I * (T - 1)))
    if bidir:
        rows.append(bal.ravel())
        cols.append(discharge.ravel())
        vals.append(np.full(IT, dt))
    e_ini = np.array([ev.initial_energy_kwh for ev in fleet])
    bal_rhs = -d.copy()
    if I:
        bal_rhs[:, 0] += e_ini
    rhs += bal_rhs.ravel().tolist()
    senses += ["=="] * IT
    ids = [ev.id for ev in fleet]
    names += [f"bal[{ids[i]},{t}]" for i in range(I) for t in range(T)]

    # final energy target: e_ini + dt*sum(pc - pd) - sum(d) >= e_tgt
    target_rows = IT + np.arange(I)
    for i, ev in enumerate(fleet):
        ts = np.flatnonzero(conn[i])
        rows.append(np.full(ts.size, target_rows[i]))
        cols.append(charge[i, ts])
        vals.append(np.full(ts.size, dt))
        if bidir:
            rows.append(np.full(ts.size, target_rows[i]))
            cols.append(discharge[i, ts])
            vals.append(np.full(ts.size, -dt))
        rhs.append(ev.target_energy_kwh - ev.initial_energy_kwh + d[i].sum())
        senses.append(">=")
        names.append(f"target[{ev.id}]")

    # zone capacity: l + sum_i b*(pc - pd) <= cap
    cap_rows = np.full((Z, T), -1, dtype=np.int64)
    next_row = IT + I
    for z, zone in enumerate(config.zones):
        for t in np.flatnonzero(np.isfinite(zone.power_cap)):
            evs = np.flatnonzero(b[:, z, t])
            cap_rows[z, t] = next_row
            rows.append(np.full(evs.size, next_row))
            cols.append(charge[evs, t])
            vals.append(np.ones(evs.size))
            if bidir:
                rows.append(np.full(evs.size, next_row))
                cols.append(discharge[evs, t])
                vals.append(-np.ones(evs.size))
            rhs.append(zone.power_cap[t] - zone.local_demand[t])
            senses.append("<=")
            names.append(f"cap[{zone.id},{t}]")
            next_row += 1

    m = next_row
    A = sp.csc_matrix(
        (np.concatenate(vals) if vals else [], (np.concatenate(rows) if rows else [],
                                                 np.concatenate(cols) if cols else [])),
        shape=(m, n),
    )
    col_names = [f"pc[{ids[i]},{t}]" for i in range(I) for t in range(T)]
    if bidir:
        col_names += [f"pd[{ids[i]},{t}]" for i in range(I) for t in range(T)]
    col_names += [f"e[{ids[i]},{t}]" for i in range(I) for t in range(T)]
    lp = LinearProgram(c, A, np.array(senses, dtype=object), np.array(rhs, dtype=float),
                       lower, upper, col_names, names)
    vmap = VariableMap(charge, discharge, energy, bal, target_rows, cap_rows, n)
    return lp, vmap


def extract_schedule(solution: LpSolution, vmap: VariableMap, config: ScenarioConfig,
                     tol: float = 1e-7) -> ChargeSchedule:
    if solution.status != LpStatus.OPTIMAL:
        raise ExtractionError(solution.status)
    x = solution.x
    dt = config.grid.dt_hours
    pc = np.clip(x[vmap.charge], 0.0, None)
    pd = np.clip(x[vmap.discharge], 0.0, None) if vmap.discharge is not None else np.zeros_like(pc)
    notes = []
    b = config.presence.presence
    conn = b.any(axis=1)
    T = pc.shape[1]
    zone_of = np.where(conn, np.argmax(b, axis=1), 0)
    lam = config.prices.charge_price[zone_of, np.arange(T)[None, :]]
    eta = config.prices.discharge_price[zone_of, np.arange(T)[None, :]]

    both = (pc > tol) & (pd > tol)
    strict = both & (eta < lam)
    if strict.any():
        i, t = np.argwhere(strict)[0]
        notes.append(f"simultaneous charge and discharge at a strict price gap (ev {config.fleet[i].id}, t={t})")
    overlap = np.minimum(pc, pd)
    pc = pc - overlap
    pd = pd - overlap
    power = pc - pd
    per_ev = np.where(conn, lam * pc - eta * pd, 0.0).sum(axis=1) * dt
    total = float(per_ev.sum())
    if abs(total - solution.objective_value) > 1e-6 * max(1.0, abs(total)):
        notes.append(f"recomputed cost {total:.9g} differs from LP objective {solution.objective_value:.9g}")
    for msg in notes:
        logger.warning(msg)
    return ChargeSchedule(
        ev_ids=[ev.id for ev in config.fleet],
        dt_hours=dt,
        power=power,
        charge=pc,
        discharge=pd,
        energy=x[vmap.energy].copy(),
        per_ev_cost=per_ev,
        total_cost=total,
        objective_value=solution.objective_value,
        iterations=solution.iterations,
        basis=solution.basis,
        warnings=notes,
    )


def _diagnose(solution: LpSolution, lp: LinearProgram, config: ScenarioConfig) -> InfeasibleScenario:
    names = [lp.row_name(r) for r in solution.certificate_rows]
    binding = [nm for nm in names if nm.startswith(("cap[", "target["))]
    evs = sorted({nm.split("[", 1)[1].split(",")[0].rstrip("]")
                  for nm in names if nm.startswith(("target[", "bal["))})
    zones = sorted({nm[4:].split(",")[0] for nm in binding if nm.startswith("cap[")})
    shown = binding or names
    more = f" (+{len(shown) - 12} more)" if len(shown) > 12 else ""
    msg = (f"scenario {config.name!r} is infeasible; phase-1 residual {solution.phase1_residual:.4g} kWh; "
           f"binding rows: {', '.join(shown[:12])}{more}")
    return InfeasibleScenario(msg, binding or names, evs, zones)


def solve_scenario(config: ScenarioConfig, *, tol_feas: float = 1e-7, tol_opt: float = 1e-9,
                   basis_hint: Basis | None = None, **solver_options) -> ChargeSchedule:
    """Validate, build, solve and extract.

    Raises ValidationError, NonconvexPriceError, InfeasibleScenario or the
    solver's SolverError.
    """
    report = validate(config)
    if not report.ok:
        raise ValidationError(report)
    lp, vmap = build_model(config)
    if basis_hint is not None:
        sol = warm_start_solve(lp, basis_hint, tol_feas, tol_opt, **solver_options)
    else:
        sol = solve(lp, tol_feas, tol_opt, **solver_options)
    if sol.status == LpStatus.INFEASIBLE:
        raise _diagnose(sol, lp, config)
    if sol.status != LpStatus.OPTIMAL:
        raise InfeasibleScenario(f"scenario model is {sol.status.value}", [], [], [])
    return extract_schedule(sol, vmap, config)
