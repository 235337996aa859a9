"""Synthetic weekly demand and price profiles for the three reference zones.

Shapes follow the usual metropolitan pattern: the CBD peaks during business
hours, the suburb in the evening, the rural zone is flat.  Real-time prices
carry a midday solar trough and an evening ramp; retail tariffs are
peak/shoulder/off-peak blocks.  Magnitudes are artifact defaults.
"""

from __future__ import annotations

import numpy as np

from gridsched.model import GridschedError, PriceProfile, PriceSchedule, TimeGrid

# day-to-day scaling keeps weekly peaks unique (Mon..Sun)
DAY_FACTOR = np.array([1.00, 1.03, 0.98, 1.01, 1.04, 0.99, 0.97])


def _bump(hour: np.ndarray, center: float, width: float) -> np.ndarray:
    # circular distance so evening bumps wrap past midnight
    dist = np.minimum(np.abs(hour - center), 24.0 - np.abs(hour - center))
    return np.exp(-0.5 * (dist / width) ** 2)


def _shape(kind: str, hour: np.ndarray, weekend: np.ndarray) -> np.ndarray:
    if kind == "cbd":
        weekday = 0.40 + 0.60 * _bump(hour, 13.0, 3.2)
        weekend_shape = 0.35 + 0.20 * _bump(hour, 13.0, 3.5)
    elif kind == "suburb":
        weekday = 0.38 + 0.20 * _bump(hour, 7.5, 1.3) + 0.62 * _bump(hour, 19.0, 2.0)
        weekend_shape = 0.40 + 0.15 * _bump(hour, 10.0, 2.0) + 0.55 * _bump(hour, 18.5, 2.2)
    elif kind == "rural":
        weekday = 0.70 + 0.22 * _bump(hour, 18.0, 2.5) + 0.08 * _bump(hour, 8.0, 1.5)
        weekend_shape = 0.70 + 0.20 * _bump(hour, 17.5, 2.5)
    elif kind == "flat":
        weekday = weekend_shape = np.ones_like(hour)
    else:
        raise GridschedError(f"unknown demand profile {kind!r}")
    return np.where(weekend, weekend_shape, weekday)


def demand_profile(kind: str, grid: TimeGrid, peak_kw: float) -> np.ndarray:
    """Local demand (kW) for one zone, scaled so its weekly maximum is ``peak_kw``."""
    hour = grid.hour_of_day() + 0.5 * grid.dt_hours
    day = grid.weekday()
    raw = _shape(kind, hour, day >= 5)
    if kind != "flat":
        raw = raw * DAY_FACTOR[day]
    return peak_kw * raw / raw.max()


def real_time_price(grid: TimeGrid, zone_kinds: list[str], rng: np.random.Generator) -> PriceSchedule:
    """Wholesale price shared by all zones plus a zone-specific network charge."""
    hour = grid.hour_of_day() + 0.5 * grid.dt_hours
    day = grid.weekday()
    weekend = day >= 5
    wholesale = (0.09
                 - 0.075 * _bump(hour, 12.5, 2.3)
                 + 0.20 * _bump(hour, 18.5, 1.4)
                 + 0.04 * _bump(hour, 7.5, 1.0))
    wholesale = wholesale * np.where(weekend, 0.85, 1.0) + rng.uniform(-0.006, 0.006, grid.interval_count)
    network_peak = (hour >= 7) & (hour < 23) & ~weekend
    rates = {"cbd": (0.055, 0.025), "suburb": (0.075, 0.030), "rural": (0.095, 0.040)}
    rows = []
    for kind in zone_kinds:
        on, off = rates.get(kind, (0.07, 0.03))
        rows.append(wholesale + np.where(network_peak, on, off))
    return PriceSchedule.matched(np.round(np.vstack(rows), 5), PriceProfile.REAL_TIME)


def retail_tou_price(grid: TimeGrid, zone_kinds: list[str]) -> PriceSchedule:
    """Peak 15:00-21:00 on weekdays, shoulder 07:00-22:00 otherwise, off-peak overnight."""
    hour = grid.hour_of_day()
    weekend = grid.weekday() >= 5
    peak = (hour >= 15) & (hour < 21) & ~weekend
    shoulder = (hour >= 7) & (hour < 22) & ~peak
    tariffs = {"cbd": (0.42, 0.30, 0.20), "suburb": (0.40, 0.28, 0.19), "rural": (0.45, 0.32, 0.22)}
    rows = []
    for kind in zone_kinds:
        p, s, o = tariffs.get(kind, (0.42, 0.30, 0.20))
        rows.append(np.where(peak, p, np.where(shoulder, s, o)))
    return PriceSchedule.matched(np.vstack(rows), PriceProfile.RETAIL_TOU)


def normalized_demand_price(total_demand, ref_prices: PriceSchedule) -> PriceSchedule:
    """Price that is affine in total demand, spanning the reference price range.

    The minimum demand maps to the cheapest reference price and the peak to
    the dearest; every zone receives the same series.
    """
    L = np.asarray(total_demand, dtype=float)
    lo, hi = L.min(), L.max()
    if not hi > lo:
        raise GridschedError("total demand is constant; the normalized price range is degenerate")
    p_min = float(ref_prices.charge_price.min())
    p_max = float(ref_prices.charge_price.max())
    price = p_min + (L - lo) * (p_max - p_min) / (hi - lo)
    zones = ref_prices.charge_price.shape[0]
    return PriceSchedule.matched(np.tile(price, (zones, 1)), PriceProfile.NORMALIZED_DEMAND)
