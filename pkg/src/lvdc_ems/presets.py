"""Named scenarios shipped with the package."""

from __future__ import annotations

import numpy as np

from .scenario import (BatteryParams, GridParams, PowerProfile, Scenario, TimeGrid)
from .tariff import FUTURE_TARIFF, AgeingParams, TariffSchedule


def s1() -> Scenario:
    """Two one-hour steps: cheap then expensive energy, 1 kWh of load in the
    second step. Optimal cost 0.25 EUR."""
    return Scenario(
        time=TimeGrid(t_start=0.0, step_hours=1.0, n_steps=2),
        pv=PowerProfile((0.0, 0.0), "pv"),
        load=PowerProfile((0.0, 1.0), "load"),
        battery=BatteryParams(e_nom=1.0, soe_min=0.0, soe_max=1.0, soe_init=0.5,
                              p_charge_max=-1.0, p_discharge_max=1.0,
                              eta_cvs=1.0, eta_e=1.0, c_nom=1000.0 / 6.0),
        grid=GridParams(10.0, -10.0),
        tariff=TariffSchedule(buy_offpeak=0.2, buy_onpeak=0.9, sell=0.05,
                              offpeak_windows=((0.0, 1.0),)),
        ageing=AgeingParams(c_st_override=0.1),
        name="s1",
    )


def balanced_island(n_steps: int = 4) -> Scenario:
    """PV equals load everywhere and the grid connection is closed."""
    flat = tuple([0.1] * n_steps)
    return Scenario(
        time=TimeGrid(step_hours=24.0 / n_steps, n_steps=n_steps),
        pv=PowerProfile(flat, "pv"),
        load=PowerProfile(flat, "load"),
        grid=GridParams(0.0, 0.0),
        name="balanced-island",
    )


# demo knobs; see cv_demo()
DEMO_STEP_HOURS = 0.25
DEMO_CONTRACT_KW = 0.2
DEMO_BASE_LOAD_KW = 0.02
DEMO_PEAK_HOURS = (18.0, 18.25)
DEMO_PEAK_EXCESS_KWH = 0.02
DEMO_TERMINAL_SOE = 0.95


def cv_demo() -> Scenario:
    """One 6 V / 12 Ah unit over 08:00 to 08:00, starting at SoE 0.35.

    A short evening peak above the grid contract forces a hard discharge,
    and the terminal SoE target forces an off-peak recharge close to
    soe_max. On the default VRLA plant the discharge runs into the voltage
    floor and the night charge into the CV ceiling.
    """
    n = int(round(24.0 / DEMO_STEP_HOURS))
    time = TimeGrid(t_start=8.0, step_hours=DEMO_STEP_HOURS, n_steps=n)
    mid = time.t_start + (np.arange(n) + 0.5) * DEMO_STEP_HOURS
    lo, hi = DEMO_PEAK_HOURS
    load = np.full(n, DEMO_BASE_LOAD_KW)
    load[(mid >= lo) & (mid < hi)] = DEMO_CONTRACT_KW + DEMO_PEAK_EXCESS_KWH / (hi - lo)
    p_max = 0.2
    return Scenario(
        time=time,
        pv=PowerProfile(tuple([0.0] * n), "pv"),
        load=PowerProfile(tuple(float(v) for v in load), "load"),
        battery=BatteryParams(soe_init=0.35, p_charge_max=-p_max, p_discharge_max=p_max),
        grid=GridParams(DEMO_CONTRACT_KW, -1.0),
        tariff=FUTURE_TARIFF,
        ageing=AgeingParams(),
        terminal_soe_constraint=DEMO_TERMINAL_SOE,
        name="cv-demo",
    )


PRESETS = {"s1": s1, "cv-demo": cv_demo, "balanced-island": balanced_island}


def get_preset(name: str) -> Scenario:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
