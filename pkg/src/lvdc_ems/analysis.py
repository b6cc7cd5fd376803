"""Planned-versus-realized comparison of a schedule and its emulation."""

from __future__ import annotations

import io
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .emulator import EmulationTrace
from .model import Schedule
from .scenario import Scenario
from .tariff import ageing_unit_cost

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class DiscrepancyReport:
    planned_cost: float
    realized_cost: float
    cost_error_pct: Optional[float]  # None when planned_cost == 0
    soe_plan_final: float
    soe_est_final: float
    soe_deviation_pct: float
    max_soe_deviation_pct: float
    cv_limited_hours: float
    violation_count: int
    planned_charge_kwh: float = 0.0
    realized_charge_kwh: float = 0.0
    planned_onpeak_purchase_kwh: float = 0.0
    realized_onpeak_purchase_kwh: float = 0.0


def cost_error_pct(planned: float, realized: float) -> Optional[float]:
    """Relative cost error against the planned cost, in percent."""
    if planned == 0:
        return None
    return (realized - planned) / planned * 100.0


def _substep_buy_prices(scenario: Scenario, trace: EmulationTrace) -> np.ndarray:
    t = scenario.tariff
    return np.array([t.buy_offpeak if t.is_offpeak(h) else t.buy_onpeak for h in trace.time_h])


def realized_cost(scenario: Scenario, trace: EmulationTrace) -> float:
    """Electricity cost of the realized grid flows plus ageing on the measured
    bus-side storage throughput (EUR)."""
    if trace.n_substeps != scenario.n_steps * trace.substeps_per_step:
        raise ValueError("trace does not cover the scenario horizon")
    h = trace.substep_hours
    buy = _substep_buy_prices(scenario, trace)
    p = trace.p_grid_kw
    grid = np.where(p > 0, buy * p, scenario.tariff.sell * p)
    c_st = ageing_unit_cost(scenario.ageing, scenario.battery.e_nom)
    return float(h * (grid.sum() + c_st * np.abs(trace.p_st_kw).sum()))


def compare(scenario: Scenario, schedule: Schedule, trace: EmulationTrace) -> DiscrepancyReport:
    realized = realized_cost(scenario, trace)
    plan_soe = schedule.soe
    est_soe = trace.soe_boundaries
    dev = np.abs(plan_soe - est_soe) * 100.0

    dt, h = scenario.dt, trace.substep_hours
    t = scenario.tariff
    step_offpeak = np.array([t.is_offpeak(scenario.time.step_start(k))
                             for k in range(scenario.n_steps)])
    sub_offpeak = np.array([t.is_offpeak(x) for x in trace.time_h])
    return DiscrepancyReport(
        planned_cost=schedule.planned_cost,
        realized_cost=realized,
        cost_error_pct=cost_error_pct(schedule.planned_cost, realized),
        soe_plan_final=float(plan_soe[-1]),
        soe_est_final=float(est_soe[-1]),
        soe_deviation_pct=float(dev[-1]),
        max_soe_deviation_pct=float(dev.max()),
        cv_limited_hours=trace.cv_limited_hours,
        violation_count=len(trace.violations),
        planned_charge_kwh=float(np.maximum(-schedule.p_batt, 0).sum() * dt),
        realized_charge_kwh=float(np.maximum(-trace.p_batt_kw, 0).sum() * h),
        planned_onpeak_purchase_kwh=float((schedule.p_g_buy * ~step_offpeak).sum() * dt),
        realized_onpeak_purchase_kwh=float(
            (np.maximum(trace.p_grid_kw, 0) * ~sub_offpeak).sum() * h),
    )


def report_to_dict(report: DiscrepancyReport) -> dict:
    return {"schema_version": REPORT_SCHEMA_VERSION, **asdict(report)}


def report_table(report: DiscrepancyReport) -> str:
    """Fixed-width text summary."""
    def fmt(v):
        if v is None:
            return "undefined"
        if isinstance(v, float):
            return f"{v:.6g}" if math.isfinite(v) else str(v)
        return str(v)

    rows = [
        ("planned cost (EUR)", report.planned_cost),
        ("realized cost (EUR)", report.realized_cost),
        ("cost error (%)", report.cost_error_pct),
        ("final SoE plan", report.soe_plan_final),
        ("final SoE estimate", report.soe_est_final),
        ("final SoE deviation (pp)", report.soe_deviation_pct),
        ("max SoE deviation (pp)", report.max_soe_deviation_pct),
        ("CV-limited time (h)", report.cv_limited_hours),
        ("planned charge (kWh)", report.planned_charge_kwh),
        ("realized charge (kWh)", report.realized_charge_kwh),
        ("planned on-peak purchase (kWh)", report.planned_onpeak_purchase_kwh),
        ("realized on-peak purchase (kWh)", report.realized_onpeak_purchase_kwh),
        ("grid contract violations", report.violation_count),
    ]
    width = max(len(k) for k, _ in rows)
    out = io.StringIO()
    for k, v in rows:
        out.write(f"{k:<{width}}  {fmt(v)}\n")
    return out.getvalue()
