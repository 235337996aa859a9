"""Domain types for fleet charge scheduling across zones.

Units are kW for power, kWh for energy and currency/kWh for prices.  Energy
moved in one interval is always ``power * grid.dt_hours``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


class GridschedError(Exception):
    """Base class for all package errors."""


class ConfigError(GridschedError):
    """A configuration document is malformed; ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class InvalidParameter(GridschedError, ValueError):
    pass


class UserType(str, Enum):
    DAY_WORKER = "DayWorker"
    LOGISTICS = "Logistics"
    TAXI = "Taxi"


class DirectionMode(str, Enum):
    UNI = "UniDirectional"
    BI = "Bidirectional"

    @classmethod
    def parse(cls, value: str) -> "DirectionMode":
        aliases = {"uni": cls.UNI, "v2g": cls.BI, "bi": cls.BI}
        if isinstance(value, cls):
            return value
        if value.lower() in aliases:
            return aliases[value.lower()]
        return cls(value)


class PriceProfile(str, Enum):
    REAL_TIME = "RealTime"
    NORMALIZED_DEMAND = "NormalizedDemand"
    RETAIL_TOU = "RetailToU"

    @property
    def short(self) -> str:
        return {"RealTime": "rt", "NormalizedDemand": "nd", "RetailToU": "re"}[self.value]

    @classmethod
    def parse(cls, value: str) -> "PriceProfile":
        if isinstance(value, cls):
            return value
        for kind in cls:
            if value.lower() in (kind.short, kind.value.lower()):
                return kind
        raise ValueError(f"unknown price profile {value!r}")


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeGrid:
    interval_count: int = 336
    dt_hours: float = 0.5
    start_label: str = "Sun 00:00"

    def __post_init__(self):
        if int(self.interval_count) < 1:
            raise InvalidParameter("interval_count must be >= 1")
        if not self.dt_hours > 0:
            raise InvalidParameter("dt_hours must be > 0")

    @property
    def intervals_per_day(self) -> int:
        return int(round(24.0 / self.dt_hours))

    @property
    def start_weekday(self) -> int:
        """Index into ``WEEKDAYS`` of the first interval's day."""
        return WEEKDAYS.index(self.start_label.split()[0][:3].title())

    @property
    def start_hour(self) -> float:
        parts = self.start_label.split()
        if len(parts) < 2:
            return 0.0
        hh, mm = parts[1].split(":")
        return int(hh) + int(mm) / 60.0

    def hour_of_day(self) -> np.ndarray:
        """Clock hour at the start of each interval."""
        t = self.start_hour + np.arange(self.interval_count) * self.dt_hours
        return np.mod(t, 24.0)

    def weekday(self) -> np.ndarray:
        t = self.start_hour + np.arange(self.interval_count) * self.dt_hours
        return (self.start_weekday + np.floor(t / 24.0).astype(int)) % 7


@dataclass(frozen=True)
class Zone:
    id: str
    name: str
    local_demand: np.ndarray
    power_cap: np.ndarray = None

    def __post_init__(self):
        demand = _frozen_array(self.local_demand)
        object.__setattr__(self, "local_demand", demand)
        if self.power_cap is None:
            cap = np.full(demand.shape, np.inf)
        else:
            cap = self.power_cap
        object.__setattr__(self, "power_cap", _frozen_array(cap))

    @property
    def peak_demand(self) -> float:
        return float(np.max(self.local_demand))

    @property
    def constrained(self) -> bool:
        return bool(np.any(np.isfinite(self.power_cap)))

    def replace(self, **changes) -> "Zone":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class PriceSchedule:
    """Charge and discharge prices, both shaped ``[zone, time]``."""

    charge_price: np.ndarray
    discharge_price: np.ndarray
    profile_kind: PriceProfile = PriceProfile.REAL_TIME

    def __post_init__(self):
        object.__setattr__(self, "charge_price", _frozen_array(np.atleast_2d(self.charge_price)))
        object.__setattr__(self, "discharge_price", _frozen_array(np.atleast_2d(self.discharge_price)))
        object.__setattr__(self, "profile_kind", PriceProfile.parse(self.profile_kind))

    @classmethod
    def matched(cls, charge_price, profile_kind=PriceProfile.REAL_TIME) -> "PriceSchedule":
        """Discharge credited at the charge price."""
        return cls(charge_price, np.array(charge_price, dtype=float), profile_kind)


@dataclass(frozen=True)
class EvSpec:
    id: str
    battery_capacity_kwh: float = 60.0
    initial_energy_kwh: float = 24.0
    target_energy_kwh: float = 48.0
    max_charge_kw: float = 7.4
    # stored as a nonpositive bound on signed power
    max_discharge_kw: float = -7.4
    user_type: UserType = UserType.DAY_WORKER

    def __post_init__(self):
        object.__setattr__(self, "user_type", UserType(self.user_type))


@dataclass(frozen=True)
class PresenceSchedule:
    presence: np.ndarray  # bool [ev, zone, time]
    driving_consumption: np.ndarray  # kWh per interval [ev, time]

    def __post_init__(self):
        object.__setattr__(self, "presence", _frozen_array(self.presence, dtype=bool))
        object.__setattr__(self, "driving_consumption", _frozen_array(self.driving_consumption))

    @property
    def connected(self) -> np.ndarray:
        """``[ev, time]`` bool: plugged in somewhere."""
        return self.presence.any(axis=1)

    def zone_index(self) -> np.ndarray:
        """``[ev, time]`` index of the connected zone, -1 while driving."""
        idx = np.argmax(self.presence, axis=1)
        return np.where(self.connected, idx, -1)


@dataclass(frozen=True)
class CapPolicy:
    """``eta=None`` means no zone is capped."""

    eta: float | None = None
    constrained_zones: str | tuple[str, ...] = "all"

    def __post_init__(self):
        zones = self.constrained_zones
        if not isinstance(zones, str):
            object.__setattr__(self, "constrained_zones", tuple(zones))
        elif zones.lower() in ("all", "none"):
            object.__setattr__(self, "constrained_zones", zones.lower())
        else:
            object.__setattr__(self, "constrained_zones", tuple(z for z in zones.split(",") if z))

    def zone_ids(self, zones: Sequence[Zone]) -> list[str]:
        if self.eta is None or self.constrained_zones == "none":
            return []
        if self.constrained_zones == "all":
            return [z.id for z in zones]
        return list(self.constrained_zones)


@dataclass(frozen=True)
class ScenarioConfig:
    grid: TimeGrid
    zones: tuple[Zone, ...]
    prices: PriceSchedule
    fleet: tuple[EvSpec, ...]
    presence: PresenceSchedule
    direction_mode: DirectionMode = DirectionMode.BI
    cap_policy: CapPolicy = field(default_factory=CapPolicy)
    # alternative price profiles keyed by short name ("rt", "nd", "re")
    price_profiles: dict = field(default_factory=dict)
    currency: str = "AUD"
    name: str = "scenario"

    def __post_init__(self):
        object.__setattr__(self, "zones", tuple(self.zones))
        object.__setattr__(self, "fleet", tuple(self.fleet))
        object.__setattr__(self, "direction_mode", DirectionMode.parse(self.direction_mode))

    @property
    def zone_ids(self) -> list[str]:
        return [z.id for z in self.zones]

    @property
    def local_demand(self) -> np.ndarray:
        return np.vstack([z.local_demand for z in self.zones])

    @property
    def power_cap(self) -> np.ndarray:
        return np.vstack([z.power_cap for z in self.zones])

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def with_cap_policy(self, policy: CapPolicy) -> "ScenarioConfig":
        """Re-derive every zone cap from ``policy``; zones it leaves out become uncapped."""
        cleared = [z.replace(power_cap=None) for z in self.zones]
        if policy.eta is not None:
            cleared = materialize_caps(cleared, policy.eta, policy.zone_ids(cleared))
        return self.replace(zones=tuple(cleared), cap_policy=policy)

    def with_price_profile(self, kind: str | PriceProfile) -> "ScenarioConfig":
        kind = PriceProfile.parse(kind)
        if self.prices.profile_kind == kind:
            return self
        if kind.short not in self.price_profiles:
            raise ConfigError("price_profiles", f"scenario carries no {kind.short!r} profile")
        return self.replace(prices=self.price_profiles[kind.short])


def materialize_caps(zones: Sequence[Zone], eta: float, which) -> list[Zone]:
    """Set ``power_cap = (1 + eta) * peak(local_demand)`` on the zones in ``which``.

    ``which`` is a collection of zone ids or ``"all"``.  Other zones are
    returned unchanged.
    """
    if eta is None or not math.isfinite(eta) or eta < -1:
        raise InvalidParameter(f"eta must be a finite number >= -1, got {eta!r}")
    if isinstance(which, str):
        which = [z.id for z in zones] if which == "all" else [w for w in which.split(",") if w]
    wanted = set(which)
    unknown = wanted - {z.id for z in zones}
    if unknown:
        raise InvalidParameter(f"unknown zone ids {sorted(unknown)}")
    out = []
    for z in zones:
        if z.id in wanted:
            cap = np.full(z.local_demand.shape, (1.0 + eta) * z.peak_demand)
            z = z.replace(power_cap=cap)
        out.append(z)
    return out


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(config: ScenarioConfig) -> ValidationReport:
    """Check every cross-reference and invariant of ``config``; never raises."""
    report = ValidationReport()
    bad = report.violations.append
    T = config.grid.interval_count
    Z = len(config.zones)
    N = len(config.fleet)

    if Z == 0:
        bad("scenario has no zones")
    ids = [z.id for z in config.zones]
    if len(set(ids)) != len(ids):
        bad("duplicate zone ids")
    for z in config.zones:
        if z.local_demand.shape != (T,):
            bad(f"zone {z.id}: local_demand has shape {z.local_demand.shape}, expected ({T},)")
            continue
        if z.power_cap.shape != (T,):
            bad(f"zone {z.id}: power_cap has shape {z.power_cap.shape}, expected ({T},)")
            continue
        if np.any(z.local_demand < 0) or not np.all(np.isfinite(z.local_demand)):
            bad(f"zone {z.id}: local_demand must be finite and nonnegative")
        if np.any(np.isnan(z.power_cap)):
            bad(f"zone {z.id}: power_cap contains NaN")
        over = np.flatnonzero(z.power_cap < z.local_demand)
        if over.size:
            report.warnings.append(
                f"zone {z.id}: local demand exceeds the cap at {over.size} intervals (first t={over[0]})"
            )

    prices = config.prices
    for name in ("charge_price", "discharge_price"):
        arr = getattr(prices, name)
        if arr.shape != (Z, T):
            bad(f"prices.{name} has shape {arr.shape}, expected ({Z}, {T})")
        elif not np.all(np.isfinite(arr)):
            bad(f"prices.{name} has non-finite entries")
    if prices.charge_price.shape == prices.discharge_price.shape:
        if np.any(prices.discharge_price > prices.charge_price):
            bad("discharge price exceeds charge price")

    ev_ids = [ev.id for ev in config.fleet]
    if len(set(ev_ids)) != len(ev_ids):
        bad("duplicate EV ids")
    for ev in config.fleet:
        cap = ev.battery_capacity_kwh
        if not 0 <= ev.initial_energy_kwh <= cap:
            bad(f"EV {ev.id}: initial energy outside [0, capacity]")
        if ev.target_energy_kwh > cap:
            bad(f"EV {ev.id}: target exceeds capacity")
        if ev.target_energy_kwh < 0:
            bad(f"EV {ev.id}: target energy negative")
        if not ev.max_charge_kw > 0:
            bad(f"EV {ev.id}: max_charge_kw must be > 0")
        if ev.max_discharge_kw > 0:
            bad(f"EV {ev.id}: max_discharge_kw must be <= 0")

    b = config.presence.presence
    d = config.presence.driving_consumption
    if b.shape != (N, Z, T):
        bad(f"presence has shape {b.shape}, expected ({N}, {Z}, {T})")
    if d.shape != (N, T):
        bad(f"driving_consumption has shape {d.shape}, expected ({N}, {T})")
    if b.shape == (N, Z, T) and d.shape == (N, T):
        count = b.sum(axis=1)
        for i, t in zip(*np.nonzero(count > 1)):
            bad(f"EV {ev_ids[i]} in two zones at once (t={t})")
            break
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            bad("driving_consumption must be finite and nonnegative")
        clash = np.argwhere((count >= 1) & (d > 0))
        if clash.size:
            i, t = clash[0]
            bad(f"EV {ev_ids[i]} drives while plugged in (t={t})")

    policy = config.cap_policy
    if policy.eta is not None and policy.eta < -1:
        bad("cap_policy.eta must be >= -1")
    if isinstance(policy.constrained_zones, tuple):
        unknown = set(policy.constrained_zones) - set(ids)
        if unknown:
            bad(f"cap_policy names unknown zones {sorted(unknown)}")
    return report
