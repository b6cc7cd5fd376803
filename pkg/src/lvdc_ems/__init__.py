"""Day-ahead energy management for a PV + battery low-voltage DC microgrid:
LP scheduling, electrical replay of the schedule and a plan/realization
comparison."""

__version__ = "0.1.0"

from .analysis import DiscrepancyReport, compare, cost_error_pct, realized_cost
from .emulator import ElectricalBatteryModel, EmulationTrace, emulate
from .model import InfeasibleScheduleError, Schedule, build_lp, solve_day_ahead
from .scenario import (BatteryParams, GridParams, PowerProfile, Scenario, TimeGrid,
                       load_scenario, load_scenario_file, save_scenario)
from .tariff import AgeingParams, TariffSchedule, ageing_unit_cost

__all__ = [
    "AgeingParams", "BatteryParams", "DiscrepancyReport", "ElectricalBatteryModel",
    "EmulationTrace", "GridParams", "InfeasibleScheduleError", "PowerProfile", "Scenario",
    "Schedule", "TariffSchedule", "TimeGrid", "ageing_unit_cost", "build_lp", "compare",
    "cost_error_pct", "emulate", "load_scenario", "load_scenario_file", "realized_cost",
    "save_scenario", "solve_day_ahead",
]
