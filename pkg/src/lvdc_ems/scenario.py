"""Problem instance for the day-ahead scheduler: time grid, PV/load profiles,
battery, grid contract, tariff and ageing parameters.

Units: kW, kWh, h, EUR, state fractions in [0, 1]. Each profile value is the
mean power over its step.

Config documents are YAML mappings (``schema_version: 1``)::

    schema_version: 1
    name: s1
    time: {t_start: 0.0, step_hours: 0.5, n_steps: 48}
    battery: {e_nom: 0.072, soe_init: 0.35, series: 1, parallel: 1, ...}
    grid: {p_buy_max: 1.0, p_sell_max: -1.0}
    tariff: {preset: paper-future, offpeak_windows: [[0, 8]]}
    ageing: {c_batt_per_kwh: 85.0, n_cycles: 226, dod: 0.8}
    terminal_soe: null
    profiles: {pv: pv.csv, load: load.csv}     # or {synth: {seed, pv_peak, load_base}}

Profile CSVs carry a ``step_index,power_kw`` header.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .tariff import TARIFF_PRESETS, AgeingParams, TariffError, TariffSchedule

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Invalid scenario; ``field`` names the offending parameter."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(message)
        self.field = field


class ConfigParseError(ScenarioError):
    pass


class ProfileLengthError(ScenarioError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    t_start: float = 0.0
    step_hours: float = 0.5
    n_steps: int = 48
    multi_day: bool = False

    def __post_init__(self) -> None:
        if not self.step_hours > 0:
            raise ScenarioError("time.step_hours must be > 0", "time.step_hours")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ScenarioError("time.n_steps must be an integer >= 1", "time.n_steps")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        if not self.multi_day and self.horizon_hours > 24.0 + 1e-9:
            raise ScenarioError("time horizon exceeds 24 h without multi_day", "time.n_steps")

    @property
    def horizon_hours(self) -> float:
        return self.step_hours * self.n_steps

    def step_start(self, k: int) -> float:
        """Wall-clock hour (not wrapped) at which step ``k`` begins."""
        return self.t_start + k * self.step_hours


@dataclass(frozen=True)
class PowerProfile:
    values: tuple[float, ...]
    kind: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.kind not in ("pv", "load"):
            raise ScenarioError(f"profile kind must be pv or load, got {self.kind!r}", "profiles")
        for k, v in enumerate(self.values):
            if not math.isfinite(v) or v < 0:
                raise ScenarioError(f"{self.kind} profile value at step {k} must be finite and >= 0",
                                    f"profiles.{self.kind}")

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def __len__(self) -> int:
        return len(self.values)


# 6 V / 12 Ah VRLA unit
CELL_E_NOM = 0.072
CELL_C_NOM = 12.0
CELL_V_NOM = 6.0
CELL_P_MAX = 0.0216  # 0.3 C at nominal voltage


@dataclass(frozen=True)
class BatteryParams:
    e_nom: float = CELL_E_NOM
    soe_min: float = 0.05
    soe_max: float = 0.95
    soe_init: float = 0.35
    p_charge_max: float = -CELL_P_MAX
    p_discharge_max: float = CELL_P_MAX
    eta_cvs: float = 0.95
    eta_e: float = 0.90
    c_nom: float = CELL_C_NOM
    eta_f: float = 0.96
    v_nom: float = CELL_V_NOM

    def __post_init__(self) -> None:
        def err(msg, name):
            raise ScenarioError(msg, f"battery.{name}")

        if not self.e_nom > 0:
            err("e_nom must be > 0", "e_nom")
        if not self.c_nom > 0:
            err("c_nom must be > 0", "c_nom")
        if not self.v_nom > 0:
            err("v_nom must be > 0", "v_nom")
        for name in ("soe_min", "soe_max", "soe_init"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                err(f"{name} must be in [0, 1]", name)
        if self.soe_min > self.soe_max:
            err("soe_max below soe_min", "soe_max")
        if self.soe_init < self.soe_min:
            err("soe_init below soe_min", "soe_init")
        if self.soe_init > self.soe_max:
            err("soe_init above soe_max", "soe_init")
        if self.p_charge_max > 0:
            err("p_charge_max must be <= 0", "p_charge_max")
        if self.p_discharge_max < 0:
            err("p_discharge_max must be >= 0", "p_discharge_max")
        for name in ("eta_cvs", "eta_e", "eta_f"):
            if not 0.0 < getattr(self, name) <= 1.0:
                err(f"{name} must be in (0, 1]", name)

    @classmethod
    def from_cells(cls, series: int = 1, parallel: int = 1, **overrides: Any) -> "BatteryParams":
        """Bank of ``series`` x ``parallel`` 6 V / 12 Ah units; overrides win."""
        if series < 1 or parallel < 1:
            raise ScenarioError("series/parallel counts must be >= 1", "battery.series")
        n = series * parallel
        base = dict(
            e_nom=CELL_E_NOM * n,
            c_nom=CELL_C_NOM * parallel,
            v_nom=CELL_V_NOM * series,
            p_charge_max=-CELL_P_MAX * n,
            p_discharge_max=CELL_P_MAX * n,
        )
        base.update(overrides)
        return cls(**base)


@dataclass(frozen=True)
class GridParams:
    p_buy_max: float = 1.0
    p_sell_max: float = -1.0

    def __post_init__(self) -> None:
        if self.p_buy_max < 0:
            raise ScenarioError("p_buy_max must be >= 0", "grid.p_buy_max")
        if self.p_sell_max > 0:
            raise ScenarioError("p_sell_max must be <= 0", "grid.p_sell_max")


@dataclass(frozen=True)
class Scenario:
    time: TimeGrid
    pv: PowerProfile
    load: PowerProfile
    battery: BatteryParams = field(default_factory=BatteryParams)
    grid: GridParams = field(default_factory=GridParams)
    tariff: TariffSchedule = field(default_factory=TariffSchedule)
    ageing: AgeingParams = field(default_factory=AgeingParams)
    terminal_soe_constraint: Optional[float] = None
    name: str = "scenario"

    def __post_init__(self) -> None:
        if self.pv.kind != "pv" or self.load.kind != "load":
            raise ScenarioError("pv/load profiles swapped", "profiles")
        for prof in (self.pv, self.load):
            if len(prof) != self.time.n_steps:
                raise ProfileLengthError(
                    f"{prof.kind} profile has {len(prof)} rows, expected {self.time.n_steps}",
                    f"profiles.{prof.kind}")
        t = self.terminal_soe_constraint
        if t is not None and not self.battery.soe_min <= t <= self.battery.soe_max:
            raise ScenarioError("terminal_soe outside [soe_min, soe_max]", "terminal_soe")

    @property
    def n_steps(self) -> int:
        return self.time.n_steps

    @property
    def dt(self) -> float:
        return self.time.step_hours

    def with_profiles(self, pv=None, load=None) -> "Scenario":
        return replace(
            self,
            pv=self.pv if pv is None else PowerProfile(tuple(pv), "pv"),
            load=self.load if load is None else PowerProfile(tuple(load), "load"),
        )


def net_power(scenario: Scenario) -> np.ndarray:
    """PV minus load per step (kW); positive means surplus."""
    return scenario.pv.array - scenario.load.array


def synth_profiles(seed: int, time: TimeGrid, pv_peak: float,
                   load_base: float) -> tuple[PowerProfile, PowerProfile]:
    """Synthetic clear-ish day: a PV half-sine between 06:00 and 20:00 with
    seeded cloud dips, and a residential load with morning/evening peaks."""
    if pv_peak < 0 or load_base < 0:
        raise ScenarioError("pv_peak and load_base must be >= 0", "profiles.synth")
    rng = np.random.default_rng(seed)
    hours = (time.t_start + (np.arange(time.n_steps) + 0.5) * time.step_hours) % 24.0

    sunrise, sunset = 6.0, 20.0
    daylight = (hours > sunrise) & (hours < sunset)
    shape = np.where(daylight, np.sin(np.pi * (hours - sunrise) / (sunset - sunrise)), 0.0)
    clouds = 1.0 - 0.25 * rng.random(time.n_steps)
    pv = pv_peak * np.clip(shape, 0.0, None) ** 1.5 * clouds

    def bump(centre, width):
        d = (hours - centre + 12.0) % 24.0 - 12.0
        return np.exp(-0.5 * (d / width) ** 2)

    load = load_base * (0.6 + 1.2 * bump(7.5, 1.2) + 2.0 * bump(19.5, 1.8))
    load = load * (1.0 + 0.1 * (rng.random(time.n_steps) - 0.5))
    return PowerProfile(tuple(pv), "pv"), PowerProfile(tuple(np.clip(load, 0.0, None)), "load")


# --------------------------------------------------------------------- I/O

def parse_profile_csv(text: str, kind: str) -> tuple[float, ...]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigParseError(f"{kind} profile CSV is empty", f"profiles.{kind}")
    if [h.strip() for h in header] != ["step_index", "power_kw"]:
        raise ConfigParseError(f"{kind} profile CSV header must be step_index,power_kw",
                               f"profiles.{kind}")
    values = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            idx, val = int(row[0]), float(row[1])
        except (ValueError, IndexError):
            raise ConfigParseError(f"{kind} profile line {lineno}: malformed row {row!r}",
                                   f"profiles.{kind}")
        if idx != len(values):
            raise ConfigParseError(f"{kind} profile line {lineno}: expected step_index "
                                   f"{len(values)}, got {idx}", f"profiles.{kind}")
        values.append(val)
    return tuple(values)


def format_profile_csv(profile: PowerProfile) -> str:
    out = io.StringIO()
    out.write("step_index,power_kw\n")
    for k, v in enumerate(profile.values):
        out.write(f"{k},{v!r}\n")
    return out.getvalue()


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigParseError(f"section {name!r} must be a mapping", name)
    return dict(sec)


def _build(cls, kwargs: dict, section: str):
    known = {f.name for f in fields(cls)}
    unknown = set(kwargs) - known
    if unknown:
        raise ScenarioError(f"unknown keys in {section}: {sorted(unknown)}", section)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ScenarioError(f"{section}: {exc}", section)


def parse_config(config_text: str) -> dict:
    try:
        doc = yaml.safe_load(config_text)
    except yaml.YAMLError as exc:
        raise ConfigParseError(f"malformed config: {exc}")
    if not isinstance(doc, dict):
        raise ConfigParseError("config must be a mapping")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {version!r}", "schema_version")
    return doc


def scenario_from_config(doc: dict, pv_values=None, load_values=None) -> Scenario:
    time = _build(TimeGrid, _section(doc, "time"), "time")

    bat = _section(doc, "battery")
    series, parallel = bat.pop("series", 1), bat.pop("parallel", 1)
    known = {f.name for f in fields(BatteryParams)}
    if set(bat) - known:
        raise ScenarioError(f"unknown keys in battery: {sorted(set(bat) - known)}", "battery")
    battery = BatteryParams.from_cells(series, parallel, **bat)

    grid = _build(GridParams, _section(doc, "grid"), "grid")

    tar = _section(doc, "tariff")
    preset = tar.pop("preset", "paper-future")
    if preset not in TARIFF_PRESETS:
        raise ScenarioError(f"unknown tariff preset {preset!r}", "tariff.preset")
    if "offpeak_windows" in tar:
        tar["offpeak_windows"] = tuple(tuple(w) for w in tar["offpeak_windows"])
    try:
        tariff = replace(TARIFF_PRESETS[preset], **tar)
    except TariffError as exc:
        raise ScenarioError(str(exc), "tariff")
    except TypeError as exc:
        raise ScenarioError(f"tariff: {exc}", "tariff")

    try:
        ageing = _build(AgeingParams, _section(doc, "ageing"), "ageing")
    except TariffError as exc:
        raise ScenarioError(str(exc), "ageing")

    profiles = _section(doc, "profiles")
    if pv_values is None or load_values is None:
        synth = profiles.get("synth")
        if synth is None:
            raise ScenarioError("profiles missing: provide CSVs or profiles.synth", "profiles")
        pv_p, load_p = synth_profiles(int(synth.get("seed", 0)), time,
                                      float(synth.get("pv_peak", 0.0)),
                                      float(synth.get("load_base", 0.0)))
        pv_values = pv_p.values if pv_values is None else pv_values
        load_values = load_p.values if load_values is None else load_values

    return Scenario(
        time=time,
        pv=PowerProfile(tuple(pv_values), "pv"),
        load=PowerProfile(tuple(load_values), "load"),
        battery=battery,
        grid=grid,
        tariff=tariff,
        ageing=ageing,
        terminal_soe_constraint=doc.get("terminal_soe"),
        name=str(doc.get("name", "scenario")),
    )


def load_scenario(config_text: str, pv_csv: Optional[str] = None,
                  load_csv: Optional[str] = None) -> Scenario:
    """Parse and validate a scenario from a YAML config and profile CSV texts.

    Profiles may be omitted when the config carries ``profiles.synth``.
    """
    doc = parse_config(config_text)
    pv = parse_profile_csv(pv_csv, "pv") if pv_csv is not None else None
    load = parse_profile_csv(load_csv, "load") if load_csv is not None else None
    return scenario_from_config(doc, pv, load)


def load_scenario_file(path) -> Scenario:
    """Load a config file; profile paths in it are relative to the file."""
    path = Path(path)
    doc = parse_config(path.read_text(encoding="utf-8"))
    profiles = _section(doc, "profiles")
    texts = {}
    for kind in ("pv", "load"):
        if kind in profiles:
            texts[kind] = (path.parent / profiles[kind]).read_text(encoding="utf-8")
    pv = parse_profile_csv(texts["pv"], "pv") if "pv" in texts else None
    load = parse_profile_csv(texts["load"], "load") if "load" in texts else None
    return scenario_from_config(doc, pv, load)


def scenario_to_config(scenario: Scenario, pv_file: str = "pv.csv",
                       load_file: str = "load.csv") -> dict:
    tariff = asdict(scenario.tariff)
    tariff["offpeak_windows"] = [list(w) for w in scenario.tariff.offpeak_windows]
    return {
        "schema_version": SCHEMA_VERSION,
        "name": scenario.name,
        "time": asdict(scenario.time),
        "battery": asdict(scenario.battery),
        "grid": asdict(scenario.grid),
        "tariff": tariff,
        "ageing": asdict(scenario.ageing),
        "terminal_soe": scenario.terminal_soe_constraint,
        "profiles": {"pv": pv_file, "load": load_file},
    }


def dump_scenario(scenario: Scenario) -> tuple[str, str, str]:
    """Serialize to (config YAML, pv CSV, load CSV); inverse of load_scenario."""
    config = yaml.safe_dump(scenario_to_config(scenario), sort_keys=False)
    return config, format_profile_csv(scenario.pv), format_profile_csv(scenario.load)


def save_scenario(scenario: Scenario, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    config, pv, load = dump_scenario(scenario)
    for name, text in (("scenario.yaml", config), ("pv.csv", pv), ("load.csv", load)):
        (directory / name).write_text(text, encoding="utf-8", newline="\n")
    return directory / "scenario.yaml"


def scenario_digest(scenario: Scenario) -> str:
    """SHA-256 over the canonical serialization."""
    h = hashlib.sha256()
    for part in dump_scenario(scenario):
        h.update(part.encode("utf-8"))
        h.update(b"\0")
    return h.hexdigest()
