"""Day-ahead scheduling LP.

Sign conventions follow the bus: grid purchase ``p_g_buy >= 0``, sale
``p_g_sell <= 0``, storage discharge ``p_st_dis >= 0`` and charge
``p_st_ch <= 0``. The solver works on nonnegative variables, so sale and
charge are stored negated and the sign is restored on extraction.

Ageing is charged on storage throughput in both directions
(``+c_st * p_st_dis - c_st * p_st_ch``). With a positive ageing cost and
buy >= sell this makes simultaneous charge/discharge and buy/sell strictly
suboptimal, which is what allows an LP instead of a MILP.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .scenario import Scenario
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, LpSolution, solve
from .tariff import ageing_unit_cost, buy_prices

SCHEDULE_SCHEMA_VERSION = 1


class ScheduleError(RuntimeError):
    pass


class InfeasibleScheduleError(ScheduleError):
    def __init__(self, message: str, constraint_classes: tuple[str, ...] = ()):
        super().__init__(message)
        self.constraint_classes = constraint_classes


@dataclass(frozen=True)
class DecisionLayout:
    """Column layout: four power blocks of ``n_steps``, then SoE at
    boundaries 1..n_steps (boundary 0 is fixed to soe_init)."""

    n_steps: int

    def g_buy(self, t: int) -> int:
        return t

    def g_sell(self, t: int) -> int:
        return self.n_steps + t

    def st_dis(self, t: int) -> int:
        return 2 * self.n_steps + t

    def st_ch(self, t: int) -> int:
        return 3 * self.n_steps + t

    def soe(self, k: int) -> int:
        if not 1 <= k <= self.n_steps:
            raise IndexError("SoE variables exist for boundaries 1..n_steps")
        return 4 * self.n_steps + k - 1

    @property
    def n_decision(self) -> int:
        return 4 * self.n_steps

    @property
    def n_vars(self) -> int:
        return 5 * self.n_steps

    def blocks(self, x: np.ndarray) -> dict[str, np.ndarray]:
        n = self.n_steps
        return {
            "g_buy": x[0:n], "g_sell": x[n:2 * n], "st_dis": x[2 * n:3 * n],
            "st_ch": x[3 * n:4 * n], "soe": x[4 * n:5 * n],
        }


@dataclass(frozen=True)
class Schedule:
    p_g_buy: np.ndarray
    p_g_sell: np.ndarray
    p_st_dis: np.ndarray
    p_st_ch: np.ndarray
    p_batt: np.ndarray
    soe: np.ndarray  # boundaries 0..n_steps
    planned_cost: float

    @property
    def n_steps(self) -> int:
        return self.p_g_buy.size

    @property
    def soe_plan(self) -> np.ndarray:
        """Planned SoE at the end of each step."""
        return self.soe[1:]

    @property
    def p_g(self) -> np.ndarray:
        return self.p_g_buy + self.p_g_sell

    @property
    def p_st(self) -> np.ndarray:
        return self.p_st_dis + self.p_st_ch


def step_bounds(scenario: Scenario) -> dict[str, float]:
    """Upper bounds of the nonnegative per-step variables."""
    b = scenario.battery
    return {
        "g_buy": scenario.grid.p_buy_max,
        "g_sell": -scenario.grid.p_sell_max,
        "st_dis": b.p_discharge_max * b.eta_cvs,
        "st_ch": -b.p_charge_max / (b.eta_cvs * b.eta_e),
    }


def build_lp(scenario: Scenario) -> LpProblem:
    n, dt = scenario.n_steps, scenario.dt
    bat = scenario.battery
    lay = DecisionLayout(n)
    c_st = ageing_unit_cost(scenario.ageing, bat.e_nom)
    prices = np.asarray(buy_prices(scenario.tariff, scenario.time))

    c = np.zeros(lay.n_vars)
    c[0:n] = dt * prices
    c[n:2 * n] = -dt * scenario.tariff.sell
    c[2 * n:4 * n] = dt * c_st

    lower = np.zeros(lay.n_vars)
    upper = np.empty(lay.n_vars)
    ub = step_bounds(scenario)
    for k, name in enumerate(("g_buy", "g_sell", "st_dis", "st_ch")):
        upper[k * n:(k + 1) * n] = ub[name]
    lower[4 * n:] = bat.soe_min
    upper[4 * n:] = bat.soe_max
    if scenario.terminal_soe_constraint is not None:
        lower[lay.soe(n)] = max(bat.soe_min, scenario.terminal_soe_constraint)

    # The battery-side power box (C-rate limits) is implied by the per-direction
    # bounds on st_dis and st_ch, so it needs no rows of its own.
    A = np.zeros((2 * n, lay.n_vars))
    rhs = np.zeros(2 * n)
    net_demand = scenario.load.array - scenario.pv.array
    k_dis = dt / (bat.eta_cvs * bat.e_nom)
    k_ch = bat.eta_cvs * bat.eta_e * dt / bat.e_nom
    for t in range(n):
        A[t, [lay.g_buy(t), lay.g_sell(t), lay.st_dis(t), lay.st_ch(t)]] = [1.0, -1.0, 1.0, -1.0]
        rhs[t] = net_demand[t]
        r = n + t
        A[r, lay.soe(t + 1)] = 1.0
        if t == 0:
            rhs[r] = bat.soe_init
        else:
            A[r, lay.soe(t)] = -1.0
        A[r, lay.st_dis(t)] = k_dis
        A[r, lay.st_ch(t)] = -k_ch

    var_names = tuple(
        [f"g_buy[{t}]" for t in range(n)] + [f"g_sell[{t}]" for t in range(n)]
        + [f"st_dis[{t}]" for t in range(n)] + [f"st_ch[{t}]" for t in range(n)]
        + [f"soe[{k}]" for k in range(1, n + 1)])
    row_names = tuple([f"balance[{t}]" for t in range(n)] + [f"soe_step[{t}]" for t in range(n)])
    return LpProblem(c, A, ("==",) * (2 * n), rhs, lower, upper, var_names, row_names)


def battery_power(scenario: Scenario, p_st_dis, p_st_ch) -> np.ndarray:
    """Battery-side power from bus-side storage flows (converter and
    round-trip losses, the latter on charge only)."""
    b = scenario.battery
    return np.asarray(p_st_dis) / b.eta_cvs + np.asarray(p_st_ch) * b.eta_cvs * b.eta_e


def soe_trajectory(scenario: Scenario, p_st_dis, p_st_ch) -> np.ndarray:
    """SoE at boundaries 0..n from bus-side storage flows."""
    b = scenario.battery
    delta = battery_power(scenario, p_st_dis, p_st_ch) * scenario.dt / b.e_nom
    return b.soe_init - np.concatenate([[0.0], np.cumsum(delta)])


def objective_cost(scenario: Scenario, schedule: Schedule) -> float:
    """Planned electricity plus ageing cost (EUR)."""
    if schedule.n_steps != scenario.n_steps:
        raise ValueError("schedule and scenario lengths differ")
    prices = np.asarray(buy_prices(scenario.tariff, scenario.time))
    c_st = ageing_unit_cost(scenario.ageing, scenario.battery.e_nom)
    per_step = (prices * schedule.p_g_buy + scenario.tariff.sell * schedule.p_g_sell
                + c_st * schedule.p_st_dis - c_st * schedule.p_st_ch)
    return float(scenario.dt * per_step.sum())


def extract_schedule(scenario: Scenario, solution: LpSolution) -> Schedule:
    if solution.status != OPTIMAL:
        raise ScheduleError(f"cannot extract a schedule from a {solution.status} solution")
    lay = DecisionLayout(scenario.n_steps)
    x = np.maximum(np.asarray(solution.x, dtype=float), 0.0)
    blk = lay.blocks(x)
    # "+ 0.0" turns negated zeros into plain zeros
    p_st_dis, p_st_ch = blk["st_dis"].copy(), -blk["st_ch"] + 0.0
    sched = Schedule(
        p_g_buy=blk["g_buy"].copy(),
        p_g_sell=-blk["g_sell"] + 0.0,
        p_st_dis=p_st_dis,
        p_st_ch=p_st_ch,
        p_batt=battery_power(scenario, p_st_dis, p_st_ch),
        soe=soe_trajectory(scenario, p_st_dis, p_st_ch),
        planned_cost=0.0,
    )
    return Schedule(**{**sched.__dict__, "planned_cost": objective_cost(scenario, sched)})


def _constraint_class(row: str) -> str:
    if row.startswith("balance"):
        return "power_balance"
    if row.startswith("soe_step"):
        return "soe_dynamics"
    if row.startswith("upper:g_"):
        return "grid_limit"
    if row.startswith("upper:st_"):
        return "battery_power_limit"
    if row.startswith("upper:soe"):
        return "soe_box"
    return row


def solve_day_ahead(scenario: Scenario) -> Schedule:
    """Optimal day-ahead schedule; raises InfeasibleScheduleError when the
    load cannot be served within grid and battery limits."""
    problem = build_lp(scenario)
    sol = solve(problem)
    if sol.status == INFEASIBLE:
        classes = tuple(dict.fromkeys(_constraint_class(r) for r in sol.infeasible_rows))
        steps = [r for r in sol.infeasible_rows]
        raise InfeasibleScheduleError(
            f"scenario {scenario.name!r} is infeasible; binding constraint classes: "
            f"{', '.join(classes) or 'unknown'} ({', '.join(steps[:6])})", classes)
    assert sol.status != UNBOUNDED, "day-ahead LP is box-bounded and cannot be unbounded"
    sched = extract_schedule(scenario, sol)
    assert abs(sched.planned_cost - sol.objective_value) <= 1e-6
    return sched


# ------------------------------------------------------------------ export

CSV_COLUMNS = ("step", "p_g_buy_kw", "p_g_sell_kw", "p_st_dis_kw", "p_st_ch_kw",
               "p_batt_kw", "soe_plan")


def schedule_to_csv(schedule: Schedule) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for t in range(schedule.n_steps):
        w.writerow([t] + [repr(float(v[t])) for v in (
            schedule.p_g_buy, schedule.p_g_sell, schedule.p_st_dis, schedule.p_st_ch,
            schedule.p_batt, schedule.soe_plan)])
    return out.getvalue()


def schedule_to_dict(schedule: Schedule) -> dict:
    return {
        "schema_version": SCHEDULE_SCHEMA_VERSION,
        "planned_cost": schedule.planned_cost,
        "soe_init": float(schedule.soe[0]),
        **{k: [float(v) for v in getattr(schedule, k)]
           for k in ("p_g_buy", "p_g_sell", "p_st_dis", "p_st_ch", "p_batt", "soe")},
    }


def schedule_from_dict(doc: dict) -> Schedule:
    if doc.get("schema_version") != SCHEDULE_SCHEMA_VERSION:
        raise ValueError(f"schedule schema_version {doc.get('schema_version')!r} "
                         f"not supported (expected {SCHEDULE_SCHEMA_VERSION})")
    arrays = {k: np.asarray(doc[k], dtype=float)
              for k in ("p_g_buy", "p_g_sell", "p_st_dis", "p_st_ch", "p_batt", "soe")}
    return Schedule(planned_cost=float(doc["planned_cost"]), **arrays)
