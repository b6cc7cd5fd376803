"""Time-of-use grid tariffs and the cyclic battery-ageing unit cost.

Prices are in EUR/kWh. Off-peak windows are hour-of-day intervals
``(start, end)``; ``start > end`` denotes a window that wraps midnight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


class TariffError(ValueError):
    """Raised when tariff or ageing parameters violate their invariants."""


@dataclass(frozen=True)
class TariffSchedule:
    buy_offpeak: float = 0.68
    buy_onpeak: float = 0.9105
    sell: float = 0.20
    offpeak_windows: tuple[tuple[float, float], ...] = ((0.0, 8.0),)

    def __post_init__(self) -> None:
        windows = tuple((float(a), float(b)) for a, b in self.offpeak_windows)
        object.__setattr__(self, "offpeak_windows", windows)
        for name in ("buy_offpeak", "buy_onpeak", "sell"):
            if getattr(self, name) < 0:
                raise TariffError(f"tariff.{name} must be >= 0")
        for start, end in windows:
            if not (0.0 <= start < 24.0 and 0.0 < end <= 24.0) or start == end:
                raise TariffError(f"tariff.offpeak_windows: bad window ({start}, {end})")
        # simultaneous buy/sell is only excluded cost-wise when buying never pays less than selling
        if min(self.buy_offpeak, self.buy_onpeak) < self.sell:
            raise TariffError("tariff.sell exceeds a buy price; buy >= sell is required")

    def is_offpeak(self, hour: float) -> bool:
        h = hour % 24.0
        for start, end in self.offpeak_windows:
            if start < end:
                if start <= h < end:
                    return True
            elif h >= start or h < end:
                return True
        return False

    @property
    def offpeak_hours(self) -> float:
        return sum((end - start) % 24.0 or 24.0 for start, end in self.offpeak_windows)


# hypothetical future prices: purchase x5, sale x2 of the regulated tariff
FUTURE_TARIFF = TariffSchedule(buy_offpeak=0.68, buy_onpeak=0.9105, sell=0.20)
# regulated French tariff, PV <= 9 kWc
REGULATED_TARIFF = TariffSchedule(buy_offpeak=0.1360, buy_onpeak=0.1821, sell=0.10)

TARIFF_PRESETS: dict[str, TariffSchedule] = {
    "paper-future": FUTURE_TARIFF,
    "paper-actual": REGULATED_TARIFF,
}


@dataclass(frozen=True)
class AgeingParams:
    """Simple cyclic ageing model.

    ``n_cycles`` and ``dod`` default to a calibration (226 x 0.8) that turns
    a battery price of 85 EUR/kWh into an ageing cost of ~0.235 EUR/kWh; they
    are not measured values.
    """

    c_batt_per_kwh: float = 85.0
    n_cycles: float = 226.0
    dod: float = 0.8
    c_st_override: Optional[float] = field(default=None)

    def __post_init__(self) -> None:
        if self.c_batt_per_kwh <= 0:
            raise TariffError("ageing.c_batt_per_kwh must be > 0")
        if self.n_cycles <= 0:
            raise TariffError("ageing.n_cycles must be > 0")
        if not 0.0 < self.dod <= 1.0:
            raise TariffError("ageing.dod must be in (0, 1]")
        if self.c_st_override is not None and self.c_st_override < 0:
            raise TariffError("ageing.c_st_override must be >= 0")


def buy_price(tariff: TariffSchedule, step: int, time) -> float:
    """Purchase price for ``step`` of ``time`` (a TimeGrid), by step start time."""
    if not 0 <= step < time.n_steps:
        raise IndexError(f"step {step} out of range for {time.n_steps} steps")
    hour = time.t_start + step * time.step_hours
    return tariff.buy_offpeak if tariff.is_offpeak(hour) else tariff.buy_onpeak


def buy_prices(tariff: TariffSchedule, time) -> list[float]:
    return [buy_price(tariff, k, time) for k in range(time.n_steps)]


def lifetime_energy(ageing: AgeingParams, e_nom: float) -> float:
    """Energy (kWh) the battery can exchange over its cycle life."""
    return e_nom * ageing.n_cycles * ageing.dod


def ageing_unit_cost(ageing: AgeingParams, e_nom: float) -> float:
    """Ageing cost per kWh exchanged; half the battery price per lifetime kWh,
    since one cycle both charges and discharges."""
    if ageing.c_st_override is not None:
        return ageing.c_st_override
    e_life = lifetime_energy(ageing, e_nom)
    if e_life <= 0:
        raise ZeroDivisionError("lifetime energy is zero")
    return 0.5 * ageing.c_batt_per_kwh * e_nom / e_life
