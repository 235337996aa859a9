"""Synthetic fleets: destination assignment, daily itineraries and presence.

Every EV draws from its own PCG64 substream keyed on ``(rng_seed, ev index)``
so growing the fleet never reshuffles the EVs already generated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from gridsched import profiles
from gridsched.model import (
    CapPolicy,
    ConfigError,
    DirectionMode,
    EvSpec,
    GridschedError,
    PresenceSchedule,
    PriceProfile,
    ScenarioConfig,
    TimeGrid,
    UserType,
    Zone,
)

DESTINATION_KINDS = ("residential", "work", "other")

# share of each destination kind per zone (CBD, Suburb, Rural)
DEFAULT_DESTINATIONS = {
    "residential": [0.10, 0.80, 0.10],
    "work": [0.70, 0.10, 0.20],
    "other": [0.30, 0.40, 0.30],
}

# kWh per travelled interval; artifact defaults, symmetric
DEFAULT_CONSUMPTION = [
    [1.0, 2.5, 4.0],
    [2.5, 1.0, 3.0],
    [4.0, 3.0, 1.0],
]

_LOCATION_STREAM = 0
_ITINERARY_STREAM = 1
_PRICE_STREAM = 2**32 - 1


class GenerationError(GridschedError):
    pass


@dataclass(frozen=True)
class ZoneSpec:
    id: str
    name: str
    profile: str
    peak_kw: float


DEFAULT_ZONES = (
    ZoneSpec("CBD", "CBD", "cbd", 100.0),
    ZoneSpec("Suburb", "Suburb", "suburb", 120.0),
    ZoneSpec("Rural", "Rural", "rural", 40.0),
)


@dataclass(frozen=True)
class GeneratorConfig:
    fleet_size: int = 10
    user_type_mix: dict = field(default_factory=lambda: {"DayWorker": 1.0, "Logistics": 0.0, "Taxi": 0.0})
    destination_distribution: dict = field(default_factory=lambda: dict(DEFAULT_DESTINATIONS))
    consumption_matrix: tuple = field(default_factory=lambda: tuple(map(tuple, DEFAULT_CONSUMPTION)))
    rng_seed: int = 0
    zones: tuple[ZoneSpec, ...] = DEFAULT_ZONES
    grid: TimeGrid = field(default_factory=TimeGrid)
    ev: dict = field(default_factory=dict)
    direction_mode: str = "Bidirectional"
    price_profile: str = "rt"
    cap_policy: CapPolicy = field(default_factory=CapPolicy)
    currency: str = "AUD"
    name: str = "scenario"

    def __post_init__(self):
        if int(self.fleet_size) < 0:
            raise ConfigError("fleet_size", "must be >= 0")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ConfigError("rng_seed", "must be a 64-bit unsigned integer")
        mix = self.user_type_mix
        for key in mix:
            try:
                UserType(key)
            except ValueError:
                raise ConfigError("user_type_mix", f"unknown user type {key!r}") from None
        if any(v < 0 for v in mix.values()) or abs(sum(mix.values()) - 1.0) > 1e-9:
            raise ConfigError("user_type_mix", "fractions must be nonnegative and sum to 1")
        Z = len(self.zones)
        for kind in DESTINATION_KINDS:
            row = self.destination_distribution.get(kind)
            if row is None:
                raise ConfigError(f"destination_distribution.{kind}", "missing")
            row = np.asarray(row, dtype=float)
            if row.shape != (Z,) or np.any(row < 0) or abs(row.sum() - 1.0) > 1e-9:
                raise ConfigError(f"destination_distribution.{kind}",
                                  f"needs {Z} nonnegative fractions summing to 1")
        C = np.asarray(self.consumption_matrix, dtype=float)
        if C.shape != (Z, Z):
            raise ConfigError("consumption_matrix", f"must be {Z}x{Z}")
        if np.any(C < 0) or not np.allclose(C, C.T):
            raise ConfigError("consumption_matrix", "must be symmetric and nonnegative")
        try:
            PriceProfile.parse(self.price_profile)
        except ValueError as exc:
            raise ConfigError("price_profile", str(exc)) from None
        try:
            DirectionMode.parse(self.direction_mode)
        except ValueError as exc:
            raise ConfigError("direction_mode", str(exc)) from None

    @property
    def consumption(self) -> np.ndarray:
        return np.asarray(self.consumption_matrix, dtype=float)

    def ev_substream(self, index: int, purpose: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(int(self.rng_seed), spawn_key=(index, purpose)))


@dataclass(frozen=True)
class Locations:
    residential: int
    work: int
    other: int

    def zone(self, kind: str) -> int:
        return getattr(self, kind)


@dataclass(frozen=True)
class Leg:
    """A parked (plugged-in) stay over intervals ``[arrive, depart)``."""

    kind: str
    zone: int
    arrive: int
    depart: int


@dataclass(frozen=True)
class Itinerary:
    ev_id: str
    legs: tuple[Leg, ...]

    def trips(self):
        """``(start, end, from_zone, to_zone)`` for each drive between legs."""
        for a, b in zip(self.legs, self.legs[1:]):
            yield a.depart, b.arrive, a.zone, b.zone


def draw_user_types(config: GeneratorConfig) -> list[UserType]:
    kinds = [UserType(k) for k in config.user_type_mix]
    weights = np.array([config.user_type_mix[k.value] for k in kinds], dtype=float)
    out = []
    for i in range(config.fleet_size):
        rng = config.ev_substream(i, _LOCATION_STREAM)
        out.append(kinds[int(rng.choice(len(kinds), p=weights))])
    return out


def assign_locations(config: GeneratorConfig) -> list[Locations]:
    """Residential, work and other zone for every EV, each drawn from its row."""
    Z = len(config.zones)
    rows = {k: np.asarray(config.destination_distribution[k], dtype=float) for k in DESTINATION_KINDS}
    out = []
    for i in range(config.fleet_size):
        rng = config.ev_substream(i, _LOCATION_STREAM)
        rng.random()  # first draw belongs to the user type
        zones = [int(rng.choice(Z, p=rows[k])) for k in DESTINATION_KINDS]
        out.append(Locations(*zones))
    return out


class _Planner:
    """Accumulates legs while walking forward through the horizon."""

    def __init__(self, grid: TimeGrid, home: int):
        self.grid = grid
        self.steps_per_hour = 1.0 / grid.dt_hours
        self.legs: list[Leg] = [Leg("residential", home, 0, 0)]

    def intervals(self, minutes: float) -> int:
        return max(1, int(round(minutes / 60.0 * self.steps_per_hour)))

    def clock(self, day_start: int, hour: float) -> int:
        return day_start + int(math.floor(hour * self.steps_per_hour + 1e-9))

    @property
    def free_from(self) -> int:
        return self.legs[-1].arrive

    def commit(self, day_legs: list[Leg], depart_home: int) -> bool:
        """Close the current home stay at ``depart_home`` and append a day's legs.

        The day's last leg must return home and end inside the horizon;
        otherwise nothing is appended and the EV stays home.
        """
        T = self.grid.interval_count
        if not day_legs or depart_home <= self.free_from or day_legs[-1].arrive >= T:
            return False
        home = self.legs[-1]
        self.legs[-1] = Leg(home.kind, home.zone, home.arrive, depart_home)
        self.legs.extend(day_legs)
        return True

    def finish(self) -> tuple[Leg, ...]:
        last = self.legs[-1]
        self.legs[-1] = Leg(last.kind, last.zone, last.arrive, self.grid.interval_count)
        return tuple(self.legs)


def _day_worker(plan: _Planner, rng, loc: Locations, day_start: int, weekend: bool):
    mins = lambda lo, hi: rng.uniform(lo, hi)  # noqa: E731
    if weekend:
        if rng.random() < 0.5:
            return None, None
        leave = plan.clock(day_start, rng.uniform(10.0, 14.0))
        t = leave + plan.intervals(mins(30, 90))
        stay = plan.intervals(mins(60, 180))
        other = Leg("other", loc.other, t, t + stay)
        t = other.depart + plan.intervals(mins(30, 90))
        return [other, Leg("residential", loc.residential, t, t)], leave
    leave = plan.clock(day_start, rng.uniform(8.0, 10.0))
    t = leave + plan.intervals(mins(30, 90))
    work = Leg("work", loc.work, t, t + plan.intervals(rng.uniform(7.0, 9.0) * 60))
    t = work.depart + plan.intervals(mins(30, 90))
    other = Leg("other", loc.other, t, t + plan.intervals(mins(30, 120)))
    t = other.depart + plan.intervals(mins(30, 90))
    return [work, other, Leg("residential", loc.residential, t, t)], leave


def _logistics(plan: _Planner, rng, loc: Locations, day_start: int, n_zones: int):
    leave = plan.clock(day_start, 6.0)
    legs = []
    t = leave
    for loop in range(2):
        for z in rng.permutation(n_zones):
            t += int(rng.integers(1, 3))
            legs.append(Leg("other", int(z), t, t + 1))
            t += 1
        t += int(rng.integers(1, 3))
        if loop == 0:
            brk = plan.intervals(rng.uniform(60, 120))
            legs.append(Leg("work", loc.work, t, t + brk))
            t += brk
    legs.append(Leg("residential", loc.residential, t, t))
    return legs, leave


def _taxi(plan: _Planner, rng, loc: Locations, day_start: int, n_zones: int):
    leave = plan.clock(day_start, 7.0)
    stop = plan.clock(day_start, 22.0)
    legs = []
    t = leave
    while True:
        shift_end = t + plan.intervals(rng.uniform(120, 180))
        while t < min(shift_end, stop):
            t += int(rng.integers(1, 3))
            legs.append(Leg("other", int(rng.integers(n_zones)), t, t + 1))
            t += 1
        t += int(rng.integers(1, 3))
        if t >= stop:
            break
        brk = plan.intervals(rng.uniform(60, 120))
        legs.append(Leg("work", loc.work, t, t + brk))
        t += brk
    legs.append(Leg("residential", loc.residential, t, t))
    return legs, leave


def generate_itinerary(ev: EvSpec, locations: Locations, grid: TimeGrid, seed, n_zones: int = 3) -> Itinerary:
    """Weekly plan for one EV following its user-type template.

    ``seed`` is anything ``numpy.random.default_rng`` accepts.  Day-workers
    commute on weekdays and make at most one outing on weekends; logistics
    and taxi vehicles run every day.
    """
    per_day = grid.intervals_per_day
    if abs(per_day * grid.dt_hours - 24.0) > 1e-9:
        raise GenerationError("dt_hours must divide a day evenly")
    if grid.interval_count < per_day:
        raise GenerationError(f"grid of {grid.interval_count} intervals is shorter than one day ({per_day})")
    rng = np.random.default_rng(seed)
    plan = _Planner(grid, locations.residential)
    offset = int(round(grid.start_hour / grid.dt_hours))
    n_days = int(math.ceil((grid.interval_count + offset) / per_day))
    for day in range(n_days):
        day_start = day * per_day - offset
        weekday = (grid.start_weekday + day) % 7
        if ev.user_type == UserType.DAY_WORKER:
            legs, leave = _day_worker(plan, rng, locations, day_start, weekday >= 5)
        elif ev.user_type == UserType.LOGISTICS:
            legs, leave = _logistics(plan, rng, locations, day_start, n_zones)
        else:
            legs, leave = _taxi(plan, rng, locations, day_start, n_zones)
        if legs:
            plan.commit(legs, leave)
    return Itinerary(ev.id, plan.finish())


def itinerary_to_presence(itineraries, consumption_matrix, grid: TimeGrid, n_zones: int) -> PresenceSchedule:
    """Presence tensor ``b[ev, zone, t]`` and driving consumption ``d[ev, t]``."""
    C = np.asarray(consumption_matrix, dtype=float)
    T = grid.interval_count
    b = np.zeros((len(itineraries), n_zones, T), dtype=bool)
    d = np.zeros((len(itineraries), T))
    for i, it in enumerate(itineraries):
        for leg in it.legs:
            b[i, leg.zone, max(leg.arrive, 0):min(leg.depart, T)] = True
        for start, end, src, dst in it.trips():
            d[i, max(start, 0):min(end, T)] = C[src, dst]
    return PresenceSchedule(b, d)


@dataclass
class GeneratedFleet:
    scenario: ScenarioConfig
    locations: list[Locations]
    itineraries: list[Itinerary]

    def summary(self) -> dict:
        zones = self.scenario.zone_ids
        types: dict[str, int] = {}
        for ev in self.scenario.fleet:
            types[ev.user_type.value] = types.get(ev.user_type.value, 0) + 1
        res = [0] * len(zones)
        for loc in self.locations:
            res[loc.residential] += 1
        return {
            "fleet_size": len(self.scenario.fleet),
            "user_types": types,
            "residential_by_zone": dict(zip(zones, res)),
        }


def build_price_profiles(grid: TimeGrid, zones: list[Zone], kinds: list[str], seed: int) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(_PRICE_STREAM,)))
    rt = profiles.real_time_price(grid, kinds, rng)
    total = np.sum([z.local_demand for z in zones], axis=0)
    return {
        "rt": rt,
        "nd": profiles.normalized_demand_price(total, rt),
        "re": profiles.retail_tou_price(grid, kinds),
    }


def generate(config: GeneratorConfig) -> GeneratedFleet:
    grid = config.grid
    zones = [Zone(zs.id, zs.name, profiles.demand_profile(zs.profile, grid, zs.peak_kw)) for zs in config.zones]
    price_profiles = build_price_profiles(grid, zones, [zs.profile for zs in config.zones], config.rng_seed)
    types = draw_user_types(config)
    locations = assign_locations(config)
    width = max(3, len(str(max(config.fleet_size - 1, 0))))
    fleet = [EvSpec(id=f"ev{i:0{width}d}", user_type=types[i], **config.ev) for i in range(config.fleet_size)]
    itineraries = [
        generate_itinerary(ev, loc, grid, np.random.SeedSequence(int(config.rng_seed), spawn_key=(i, _ITINERARY_STREAM)),
                           n_zones=len(zones))
        for i, (ev, loc) in enumerate(zip(fleet, locations))
    ]
    presence = itinerary_to_presence(itineraries, config.consumption, grid, len(zones))
    active = PriceProfile.parse(config.price_profile).short
    scenario = ScenarioConfig(
        grid=grid,
        zones=tuple(zones),
        prices=price_profiles[active],
        fleet=tuple(fleet),
        presence=presence,
        direction_mode=DirectionMode.parse(config.direction_mode),
        price_profiles=price_profiles,
        currency=config.currency,
        name=config.name,
    ).with_cap_policy(config.cap_policy)
    return GeneratedFleet(scenario, locations, itineraries)
