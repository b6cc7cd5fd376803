"""Replay of a schedule on an electrical battery model.

The battery is a zeroth-order Thevenin cell: open-circuit voltage linear in
the (hidden) charge state, plus a series resistance. Charging follows
CC-CV: once the terminal voltage would exceed ``v_max`` the voltage is held
there and the current tapers. Discharge is floored at ``v_min`` the same
way. An optional BMS stops discharge (charge) once the SoC estimate reaches
its lower (upper) limit.

Battery currents follow the storage sign convention: charge < 0,
discharge > 0. The wattmeter estimators integrate the measured current
(SoC, Ah domain) and current times voltage (SoE, Wh domain).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import Schedule
from .scenario import BatteryParams, Scenario

VRLA_CELL_VOLTAGE = 6.0
VRLA_CELL_AH = 12.0


@dataclass(frozen=True)
class ElectricalBatteryModel:
    """Defaults describe one 6 V / 12 Ah VRLA unit. They are plausible
    values for that chemistry, not measurements."""

    ocv_at_empty: float = 5.91
    ocv_at_full: float = 6.45
    r_internal: float = 0.05
    v_max: float = 7.35
    v_min: float = 5.25
    i_charge_max: float = 36.0
    i_discharge_max: float = 36.0
    true_state: Optional[float] = None
    eta_f: Optional[float] = None
    bms: bool = False
    soc_min: Optional[float] = None
    soc_max: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.ocv_at_empty < self.ocv_at_full <= self.v_max:
            raise ValueError("need ocv_at_empty < ocv_at_full <= v_max")
        if not self.r_internal > 0:
            raise ValueError("r_internal must be > 0")
        if not self.v_min < self.ocv_at_empty:
            raise ValueError("v_min must be below ocv_at_empty")
        if self.i_charge_max < 0 or self.i_discharge_max < 0:
            raise ValueError("current limits are magnitudes and must be >= 0")
        if self.true_state is not None and not 0.0 <= self.true_state <= 1.0:
            raise ValueError("true_state must be in [0, 1]")
        if self.eta_f is not None and not 0.0 < self.eta_f <= 1.0:
            raise ValueError("eta_f must be in (0, 1]")

    def ocv(self, state: float) -> float:
        return self.ocv_at_empty + (self.ocv_at_full - self.ocv_at_empty) * state

    @classmethod
    def vrla_bank(cls, series: int = 1, parallel: int = 1, **overrides) -> "ElectricalBatteryModel":
        """Default unit scaled to ``series`` x ``parallel``."""
        unit = cls()
        base = dict(
            ocv_at_empty=unit.ocv_at_empty * series,
            ocv_at_full=unit.ocv_at_full * series,
            r_internal=unit.r_internal * series / parallel,
            v_max=unit.v_max * series,
            v_min=unit.v_min * series,
            i_charge_max=unit.i_charge_max * parallel,
            i_discharge_max=unit.i_discharge_max * parallel,
        )
        base.update(overrides)
        return cls(**base)

    @classmethod
    def for_battery(cls, battery: BatteryParams, **overrides) -> "ElectricalBatteryModel":
        series = max(1, round(battery.v_nom / VRLA_CELL_VOLTAGE))
        parallel = max(1, round(battery.c_nom / VRLA_CELL_AH))
        return cls.vrla_bank(series, parallel, **overrides)

    @classmethod
    def ideal(cls, battery: BatteryParams) -> "ElectricalBatteryModel":
        """Lossless plant: near-flat OCV chosen so charge and energy states
        coincide, negligible resistance, no CV, no current limits, no BMS."""
        v = battery.e_nom * 1000.0 / battery.c_nom
        return cls(ocv_at_empty=v * (1 - 1e-12), ocv_at_full=v, r_internal=1e-12,
                   v_max=math.inf, v_min=0.0, i_charge_max=math.inf,
                   i_discharge_max=math.inf, eta_f=1.0, bms=False)


@dataclass(frozen=True)
class ViolationEvent:
    """Contiguous run of sub-steps where realized grid power broke the contract."""

    t_start: float
    t_end: float
    peak_kw: float
    limit_kw: float
    kind: str  # "import" or "export"


@dataclass
class EmulationTrace:
    time_h: np.ndarray
    p_batt_kw: np.ndarray
    i_batt_a: np.ndarray
    v_batt_v: np.ndarray
    soc_est: np.ndarray
    soe_est: np.ndarray
    p_grid_kw: np.ndarray
    cv_limited: np.ndarray
    p_st_kw: np.ndarray
    true_state: np.ndarray
    soc_est_raw: np.ndarray
    soe_est_raw: np.ndarray
    substep_hours: float
    substeps_per_step: int
    soe_init: float
    violations: list[ViolationEvent] = field(default_factory=list)

    @property
    def n_substeps(self) -> int:
        return self.time_h.size

    def at_boundaries(self, values: np.ndarray) -> np.ndarray:
        """State ``values`` (end-of-substep) sampled at schedule boundaries 0..n."""
        k = self.substeps_per_step
        return np.concatenate([[self.soe_init], values[k - 1::k]])

    @property
    def soe_boundaries(self) -> np.ndarray:
        return self.at_boundaries(self.soe_est)

    @property
    def soc_boundaries(self) -> np.ndarray:
        return self.at_boundaries(self.soc_est)

    @property
    def cv_limited_hours(self) -> float:
        return float(self.cv_limited.sum() * self.substep_hours)


def soc_update(soc: float, i_charge: float, i_discharge: float, v: float, dt: float,
               battery: BatteryParams, eta_f: Optional[float] = None) -> float:
    """Coulomb-counting SoC step from wattmeter currents (A) over ``dt`` hours."""
    return min(1.0, max(0.0, _soc_raw(soc, i_charge, i_discharge, dt, battery, eta_f)))


def soe_update(soe: float, i_charge: float, i_discharge: float, v: float, dt: float,
               battery: BatteryParams, eta_f: Optional[float] = None) -> float:
    """Energy-counting SoE step from wattmeter current and voltage."""
    return min(1.0, max(0.0, _soe_raw(soe, i_charge, i_discharge, v, dt, battery, eta_f)))


def _soc_raw(soc, i_charge, i_discharge, dt, battery, eta_f=None):
    eta = battery.eta_f if eta_f is None else eta_f
    return soc - i_charge * eta * dt / battery.c_nom - i_discharge * dt / battery.c_nom


def _soe_raw(soe, i_charge, i_discharge, v, dt, battery, eta_f=None):
    eta = battery.eta_f if eta_f is None else eta_f
    e_wh = battery.e_nom * 1000.0
    return soe - i_charge * v * eta * dt / e_wh - i_discharge * v * dt / e_wh


def current_for_power(p_w: float, ocv: float, r: float) -> float:
    """Current delivering terminal power ``p_w`` from v = ocv - i*r.

    Beyond the maximum deliverable power the max-power current is returned.
    """
    disc = ocv * ocv - 4.0 * r * p_w
    if disc < 0.0:
        return ocv / (2.0 * r)
    return 2.0 * p_w / (ocv + math.sqrt(disc))


def _bus_power(p_batt: float, battery: BatteryParams) -> float:
    """Bus-side storage power for a battery-side power (inverse of the
    converter/round-trip chain)."""
    if p_batt >= 0.0:
        return p_batt * battery.eta_cvs
    return p_batt / (battery.eta_cvs * battery.eta_e)


def emulate(scenario: Scenario, schedule: Schedule, model: ElectricalBatteryModel,
            substeps_per_step: int = 60) -> EmulationTrace:
    """Hold each step's battery power setpoint and integrate the plant."""
    if substeps_per_step < 1:
        raise ValueError("substeps_per_step must be >= 1")
    if schedule.n_steps != scenario.n_steps:
        raise ValueError("schedule and scenario lengths differ")
    bat = scenario.battery
    eta_f = bat.eta_f if model.eta_f is None else model.eta_f
    soc_lo = bat.soe_min if model.soc_min is None else model.soc_min
    soc_hi = bat.soe_max if model.soc_max is None else model.soc_max

    n_sub = scenario.n_steps * substeps_per_step
    h = scenario.dt / substeps_per_step
    load, pv = scenario.load.array, scenario.pv.array
    cols = {k: np.zeros(n_sub) for k in (
        "time_h", "p_batt_kw", "i_batt_a", "v_batt_v", "soc_est", "soe_est", "p_grid_kw",
        "p_st_kw", "true_state", "soc_est_raw", "soe_est_raw")}
    cv = np.zeros(n_sub, dtype=bool)

    state = bat.soe_init if model.true_state is None else model.true_state
    soc = soe = soc_raw = soe_raw = bat.soe_init
    r = model.r_internal

    for j in range(n_sub):
        t = j // substeps_per_step
        ocv = model.ocv(state)
        p_cmd = float(schedule.p_batt[t]) * 1000.0
        i = current_for_power(p_cmd, ocv, r)
        i = min(max(i, -model.i_charge_max), model.i_discharge_max)

        if model.bms and ((i > 0 and soc <= soc_lo) or (i < 0 and soc >= soc_hi)):
            i = 0.0
        # the hidden charge state cannot leave [0, 1] within a sub-step
        i = min(i, state * bat.c_nom / h)
        i = max(i, -(1.0 - state) * bat.c_nom / (eta_f * h))

        limited = False
        v = ocv - i * r
        if i < 0 and v > model.v_max:
            i = min(0.0, (ocv - model.v_max) / r)
            v = model.v_max if i < 0 else ocv
            limited = True
        elif i > 0 and v < model.v_min:
            i = max(0.0, (ocv - model.v_min) / r)
            v = model.v_min if i > 0 else ocv

        i_ch, i_dis = min(i, 0.0), max(i, 0.0)
        state = min(1.0, max(0.0, state - (i_ch * eta_f + i_dis) * h / bat.c_nom))
        soc_raw = _soc_raw(soc_raw, i_ch, i_dis, h, bat, eta_f)
        soe_raw = _soe_raw(soe_raw, i_ch, i_dis, v, h, bat, eta_f)
        soc = soc_update(soc, i_ch, i_dis, v, h, bat, eta_f)
        soe = soe_update(soe, i_ch, i_dis, v, h, bat, eta_f)

        p_meas = v * i / 1000.0
        p_st = _bus_power(p_meas, bat)
        cols["time_h"][j] = scenario.time.t_start + j * h
        cols["p_batt_kw"][j] = p_meas
        cols["i_batt_a"][j] = i
        cols["v_batt_v"][j] = v
        cols["soc_est"][j] = soc
        cols["soe_est"][j] = soe
        cols["p_st_kw"][j] = p_st
        cols["p_grid_kw"][j] = load[t] - pv[t] - p_st
        cols["true_state"][j] = state
        cols["soc_est_raw"][j] = soc_raw
        cols["soe_est_raw"][j] = soe_raw
        cv[j] = limited

    violations = _grid_violations(cols["time_h"], cols["p_grid_kw"], h, scenario)
    return EmulationTrace(cv_limited=cv, substep_hours=h, substeps_per_step=substeps_per_step,
                          soe_init=bat.soe_init, violations=violations, **cols)


def _grid_violations(time_h, p_grid, h, scenario, tol=1e-9) -> list[ViolationEvent]:
    events = []
    for kind, limit, over in (
        ("import", scenario.grid.p_buy_max, p_grid > scenario.grid.p_buy_max + tol),
        ("export", scenario.grid.p_sell_max, p_grid < scenario.grid.p_sell_max - tol),
    ):
        j = 0
        while j < over.size:
            if not over[j]:
                j += 1
                continue
            k = j
            while k < over.size and over[k]:
                k += 1
            seg = p_grid[j:k]
            peak = seg.max() if kind == "import" else seg.min()
            events.append(ViolationEvent(float(time_h[j]), float(time_h[k - 1] + h),
                                         float(peak), float(limit), kind))
            j = k
    events.sort(key=lambda e: e.t_start)
    return events


# ------------------------------------------------------------------ export

TRACE_COLUMNS = ("time_h", "p_batt_kw", "i_batt_a", "v_batt_v", "soc_est", "soe_est",
                 "p_grid_kw", "cv_limited")


def trace_to_csv(trace: EmulationTrace) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for j in range(trace.n_substeps):
        w.writerow([repr(float(getattr(trace, c)[j])) for c in TRACE_COLUMNS[:-1]]
                   + [int(trace.cv_limited[j])])
    return out.getvalue()


def trace_to_dict(trace: EmulationTrace) -> dict:
    """Full trace (all columns) as JSON-ready lists."""
    arrays = ("time_h", "p_batt_kw", "i_batt_a", "v_batt_v", "soc_est", "soe_est",
              "p_grid_kw", "p_st_kw", "true_state", "soc_est_raw", "soe_est_raw")
    doc = {k: [float(v) for v in getattr(trace, k)] for k in arrays}
    doc["cv_limited"] = [bool(v) for v in trace.cv_limited]
    doc.update(substep_hours=trace.substep_hours, substeps_per_step=trace.substeps_per_step,
               soe_init=trace.soe_init,
               violations=[e.__dict__ for e in trace.violations])
    return doc


def trace_from_dict(doc: dict) -> EmulationTrace:
    arrays = {k: np.asarray(doc[k], dtype=float) for k in (
        "time_h", "p_batt_kw", "i_batt_a", "v_batt_v", "soc_est", "soe_est", "p_grid_kw",
        "p_st_kw", "true_state", "soc_est_raw", "soe_est_raw")}
    return EmulationTrace(cv_limited=np.asarray(doc["cv_limited"], dtype=bool),
                          substep_hours=float(doc["substep_hours"]),
                          substeps_per_step=int(doc["substeps_per_step"]),
                          soe_init=float(doc["soe_init"]),
                          violations=[ViolationEvent(**e) for e in doc["violations"]],
                          **arrays)


def trace_summary(trace: EmulationTrace) -> dict:
    return {
        "n_substeps": trace.n_substeps,
        "substep_hours": trace.substep_hours,
        "cv_limited_hours": trace.cv_limited_hours,
        "soc_est_final": float(trace.soc_est[-1]),
        "soe_est_final": float(trace.soe_est[-1]),
        "charge_energy_kwh": float(np.maximum(-trace.p_batt_kw, 0).sum() * trace.substep_hours),
        "discharge_energy_kwh": float(np.maximum(trace.p_batt_kw, 0).sum() * trace.substep_hours),
        "violation_count": len(trace.violations),
        "violations": [e.__dict__ for e in trace.violations],
    }
