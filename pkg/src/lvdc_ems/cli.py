"""Command-line front end: ``schedule``, ``emulate``, ``compare``, ``sweep``.

Every subcommand writes plain files into ``--out`` plus a
``<subcommand>.manifest.json`` recording its inputs and their SHA-256
digests. Outputs are assembled in memory and written only after the whole
command succeeded, so a failing run leaves nothing behind.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analysis import compare, report_table, report_to_dict
from .emulator import (ElectricalBatteryModel, emulate, trace_from_dict, trace_summary,
                       trace_to_csv, trace_to_dict)
from .model import (InfeasibleScheduleError, schedule_from_dict, schedule_to_csv,
                    schedule_to_dict, solve_day_ahead)
from .presets import PRESETS
from .scenario import (Scenario, ScenarioError, load_scenario_file, parse_config,
                       scenario_digest)
from .simplex import IterationLimitError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_SCHEMA = 4
EXIT_DIGEST = 5
EXIT_SOLVER = 6

ARTIFACT_SCHEMA_VERSION = 1


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunManifest:
    subcommand: str
    scenario: str
    output_dir: str
    parameters: dict
    tool_version: str = __version__
    input_digests: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"schema_version": ARTIFACT_SCHEMA_VERSION, **asdict(self)}


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _finite_or_str(v):
    # JSON has no infinity; the ideal plant uses it for "no limit"
    if isinstance(v, float) and not np.isfinite(v):
        return str(v)
    return v


def to_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


# ------------------------------------------------------------------ inputs

def _read_bytes(path: Path, what: str) -> bytes:
    try:
        return path.read_bytes()
    except FileNotFoundError:
        raise CliError(f"{what} not found: {path}", EXIT_INPUT)
    except OSError as exc:
        raise CliError(f"cannot read {what} {path}: {exc}", EXIT_INPUT)


def load_scenario_arg(spec: str) -> tuple[Scenario, dict]:
    """Resolve ``--scenario``: a YAML path or ``preset:<name>``.

    Returns the scenario and the digests of every file it was read from.
    """
    if spec.startswith("preset:"):
        name = spec.split(":", 1)[1]
        if name not in PRESETS:
            raise CliError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}", EXIT_INPUT)
        scenario = PRESETS[name]()
        return scenario, {spec: scenario_digest(scenario)}
    path = Path(spec)
    digests = {str(path): sha256_bytes(_read_bytes(path, "scenario file"))}
    try:
        doc = parse_config(path.read_text(encoding="utf-8"))
        profiles = doc.get("profiles") or {}
        for kind in ("pv", "load"):
            if isinstance(profiles, dict) and kind in profiles:
                p = path.parent / str(profiles[kind])
                digests[str(p)] = sha256_bytes(_read_bytes(p, f"{kind} profile"))
        return load_scenario_file(path), digests
    except (ScenarioError, ValueError) as exc:
        raise CliError(f"invalid scenario {path}: {exc}", EXIT_INPUT)


def _load_json(path: Path, what: str) -> tuple[dict, str]:
    raw = _read_bytes(path, what)
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CliError(f"{what} {path} is not valid JSON: {exc}", EXIT_INPUT)
    if not isinstance(doc, dict):
        raise CliError(f"{what} {path} must be a JSON object", EXIT_INPUT)
    if doc.get("schema_version") != ARTIFACT_SCHEMA_VERSION:
        raise CliError(f"{what} {path} has schema_version {doc.get('schema_version')!r}, "
                       f"this tool reads {ARTIFACT_SCHEMA_VERSION}", EXIT_SCHEMA)
    return doc, sha256_bytes(raw)


def _check_digest(doc: dict, expected: str, what: str) -> None:
    got = doc.get("scenario_digest")
    if got != expected:
        raise CliError(f"{what} scenario digest mismatch: artifact has {str(got)[:12]}..., "
                       f"scenario is {expected[:12]}...", EXIT_DIGEST)


def write_outputs(out_dir: Path, files: dict[str, str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out_dir / name).write_text(text, encoding="utf-8", newline="\n")


# ---------------------------------------------------------------- pipeline

def _model_from_args(scenario: Scenario, ideal: bool, bms: bool) -> ElectricalBatteryModel:
    if ideal:
        return ElectricalBatteryModel.ideal(scenario.battery)
    return ElectricalBatteryModel.for_battery(scenario.battery, bms=bms)


def run_schedule(scenario: Scenario) -> dict[str, str]:
    try:
        sched = solve_day_ahead(scenario)
    except InfeasibleScheduleError as exc:
        raise CliError(str(exc), EXIT_INFEASIBLE)
    except IterationLimitError as exc:
        raise CliError(f"solver gave up: {exc}", EXIT_SOLVER)
    doc = {
        "schema_version": ARTIFACT_SCHEMA_VERSION,
        "scenario_digest": scenario_digest(scenario),
        "scenario_name": scenario.name,
        "schedule": schedule_to_dict(sched),
    }
    return {"schedule.json": to_json(doc), "schedule.csv": schedule_to_csv(sched),
            "summary.txt": f"planned_cost_eur {sched.planned_cost!r}\n"}


def run_emulate(scenario: Scenario, schedule_doc: dict, schedule_sha: str,
                substeps: int, ideal: bool, bms: bool) -> dict[str, str]:
    try:
        sched = schedule_from_dict(schedule_doc["schedule"])
    except (KeyError, ValueError, TypeError) as exc:
        code = EXIT_SCHEMA if "schema_version" in str(exc) else EXIT_INPUT
        raise CliError(f"malformed schedule artifact: {exc}", code)
    if sched.n_steps != scenario.n_steps:
        raise CliError("schedule length does not match the scenario", EXIT_INPUT)
    model = _model_from_args(scenario, ideal, bms)
    trace = emulate(scenario, sched, model, substeps)
    summary = {
        "schema_version": ARTIFACT_SCHEMA_VERSION,
        "scenario_digest": scenario_digest(scenario),
        "schedule_sha256": schedule_sha,
        "model": {k: _finite_or_str(v) for k, v in asdict(model).items()},
        **trace_summary(trace),
    }
    trace_doc = {"schema_version": ARTIFACT_SCHEMA_VERSION,
                 "scenario_digest": scenario_digest(scenario),
                 "schedule_sha256": schedule_sha,
                 "trace": trace_to_dict(trace)}
    return {"trace.csv": trace_to_csv(trace), "trace.json": to_json(trace_doc),
            "emulation.json": to_json(summary)}


def plot_power_csv(scenario: Scenario, sched, trace) -> str:
    """Per-step planned vs. realized (step-mean) powers."""
    k = trace.substeps_per_step
    real_batt = trace.p_batt_kw.reshape(-1, k).mean(axis=1)
    real_grid = trace.p_grid_kw.reshape(-1, k).mean(axis=1)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["step", "t_start_h", "p_pv_kw", "p_load_kw", "p_batt_plan_kw",
                "p_batt_real_kw", "p_grid_plan_kw", "p_grid_real_kw"])
    for t in range(scenario.n_steps):
        w.writerow([t, repr(scenario.time.step_start(t))] + [repr(float(v)) for v in (
            scenario.pv.values[t], scenario.load.values[t], sched.p_batt[t], real_batt[t],
            sched.p_g[t], real_grid[t])])
    return out.getvalue()


def plot_state_csv(scenario: Scenario, sched, trace) -> str:
    """Boundary-sampled SoE plan, SoE/SoC estimates and their limit lines."""
    b = scenario.battery
    est_soe, est_soc = trace.soe_boundaries, trace.soc_boundaries
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["boundary", "t_h", "soe_plan", "soe_est", "soc_est",
                "soe_min", "soe_max", "soc_min", "soc_max"])
    for k in range(scenario.n_steps + 1):
        w.writerow([k, repr(scenario.time.step_start(k))] + [repr(float(v)) for v in (
            sched.soe[k], est_soe[k], est_soc[k], b.soe_min, b.soe_max, b.soe_min, b.soe_max)])
    return out.getvalue()


def run_compare(scenario: Scenario, schedule_doc: dict, trace_doc: dict) -> dict[str, str]:
    digest = scenario_digest(scenario)
    _check_digest(schedule_doc, digest, "schedule artifact")
    _check_digest(trace_doc, digest, "trace artifact")
    try:
        sched = schedule_from_dict(schedule_doc["schedule"])
        trace = trace_from_dict(trace_doc["trace"])
    except (KeyError, ValueError, TypeError) as exc:
        raise CliError(f"malformed artifact: {exc}", EXIT_INPUT)
    if sched.n_steps != scenario.n_steps or trace.n_substeps != scenario.n_steps * trace.substeps_per_step:
        raise CliError("artifact lengths do not match the scenario", EXIT_INPUT)
    report = compare(scenario, sched, trace)
    doc = {**report_to_dict(report), "scenario_digest": digest}
    return {"report.json": to_json(doc), "report.txt": report_table(report),
            "plot_power.csv": plot_power_csv(scenario, sched, trace),
            "plot_state.csv": plot_state_csv(scenario, sched, trace)}


# ---------------------------------------------------------------- commands

def _manifest(args, sub: str, params: dict, digests: dict) -> RunManifest:
    return RunManifest(subcommand=sub, scenario=args.scenario, output_dir=str(args.out),
                       parameters=params, input_digests=dict(sorted(digests.items())))


def cmd_schedule(args) -> int:
    scenario, digests = load_scenario_arg(args.scenario)
    man = _manifest(args, "schedule", {}, digests)
    files = run_schedule(scenario)
    files[f"{man.subcommand}.manifest.json"] = to_json(man.to_dict())
    write_outputs(Path(args.out), files)
    print(files["summary.txt"], end="")
    return EXIT_OK


def cmd_emulate(args) -> int:
    scenario, digests = load_scenario_arg(args.scenario)
    sched_doc, sched_sha = _load_json(Path(args.schedule), "schedule artifact")
    digests[str(args.schedule)] = sched_sha
    _check_digest(sched_doc, scenario_digest(scenario), "schedule artifact")
    if args.substeps < 1:
        raise CliError("--substeps must be >= 1", EXIT_INPUT)
    params = {"substeps": args.substeps, "ideal": args.ideal, "bms": args.bms}
    man = _manifest(args, "emulate", params, digests)
    files = run_emulate(scenario, sched_doc, sched_sha, args.substeps, args.ideal, args.bms)
    files[f"{man.subcommand}.manifest.json"] = to_json(man.to_dict())
    write_outputs(Path(args.out), files)
    summ = json.loads(files["emulation.json"])
    print(f"cv_limited_hours {summ['cv_limited_hours']!r}\n"
          f"soe_est_final {summ['soe_est_final']!r}")
    return EXIT_OK


def cmd_compare(args) -> int:
    scenario, digests = load_scenario_arg(args.scenario)
    sched_doc, sched_sha = _load_json(Path(args.schedule), "schedule artifact")
    trace_doc, trace_sha = _load_json(Path(args.trace), "trace artifact")
    digests[str(args.schedule)] = sched_sha
    digests[str(args.trace)] = trace_sha
    man = _manifest(args, "compare", {}, digests)
    files = run_compare(scenario, sched_doc, trace_doc)
    files[f"{man.subcommand}.manifest.json"] = to_json(man.to_dict())
    write_outputs(Path(args.out), files)
    print(files["report.txt"], end="")
    return EXIT_OK


def _sweep_one(spec: str, substeps: int, ideal: bool, bms: bool) -> tuple[str, dict[str, str]]:
    scenario, _ = load_scenario_arg(spec)
    files = {}
    sched = run_schedule(scenario)
    files.update(sched)
    sched_doc = json.loads(sched["schedule.json"])
    sched_sha = sha256_bytes(sched["schedule.json"].encode("utf-8"))
    emu = run_emulate(scenario, sched_doc, sched_sha, substeps, ideal, bms)
    files.update(emu)
    files.update(run_compare(scenario, sched_doc, json.loads(emu["trace.json"])))
    return scenario.name, files


def _sweep_worker(job):
    try:
        return _sweep_one(*job), None
    except CliError as exc:
        return None, (job[0], str(exc), exc.code)


def cmd_sweep(args) -> int:
    if args.substeps < 1:
        raise CliError("--substeps must be >= 1", EXIT_INPUT)
    digests = {}
    for spec in args.scenarios:
        digests.update(load_scenario_arg(spec)[1])
    jobs = [(spec, args.substeps, args.ideal, args.bms) for spec in args.scenarios]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    else:
        results = [_sweep_worker(j) for j in jobs]

    failures = [err for _, err in results if err is not None]
    if failures:
        for spec, msg, _ in failures:
            print(f"error: {spec}: {msg}", file=sys.stderr)
        raise CliError(f"{len(failures)} of {len(jobs)} scenarios failed",
                       max(code for *_, code in failures))
    names = [res[0] for res, _ in results]
    if len(set(names)) != len(names):
        raise CliError("scenario names in a sweep must be unique", EXIT_INPUT)

    out = Path(args.out)
    rows = []
    for (name, files), _ in results:
        write_outputs(out / name, files)
        rep = json.loads(files["report.json"])
        rows.append({"scenario": name, **{k: rep[k] for k in (
            "planned_cost", "realized_cost", "cost_error_pct", "soe_deviation_pct",
            "cv_limited_hours", "violation_count")}})
    man = RunManifest(subcommand="sweep", scenario=",".join(args.scenarios), output_dir=str(out),
                      parameters={"substeps": args.substeps, "ideal": args.ideal, "bms": args.bms},
                      input_digests=dict(sorted(digests.items())))
    write_outputs(out, {"sweep.json": to_json({"schema_version": ARTIFACT_SCHEMA_VERSION,
                                               "runs": rows}),
                        "sweep.manifest.json": to_json(man.to_dict())})
    for r in rows:
        print(f"{r['scenario']}: cost {r['planned_cost']:.6g} -> {r['realized_cost']:.6g}")
    return EXIT_OK


# ------------------------------------------------------------------ parser

SCENARIO_HELP = "scenario YAML file, or preset:<name> (" + ", ".join(sorted(PRESETS)) + ")"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="lvdc-ems",
        description="Day-ahead battery scheduling, plant emulation and plan/realization comparison.",
        epilog=(f"exit codes: {EXIT_OK} ok, {EXIT_INPUT} input error, {EXIT_INFEASIBLE} infeasible, "
                f"{EXIT_SCHEMA} schema mismatch, {EXIT_DIGEST} scenario digest mismatch, "
                f"{EXIT_SOLVER} solver iteration limit"))
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--scenario", required=True, help=SCENARIO_HELP)
        sp.add_argument("--out", required=True, help="output directory (created if needed)")

    def plant(sp):
        sp.add_argument("--substeps", type=int, default=60,
                        help="emulator sub-steps per schedule step (default 60)")
        sp.add_argument("--ideal", action="store_true",
                        help="lossless plant that reproduces the plan")
        sp.add_argument("--bms", action="store_true",
                        help="stop the battery when the SoC estimate reaches its limits")

    sp = sub.add_parser("schedule", help="solve the day-ahead LP")
    common(sp)
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("emulate", help="replay a schedule on the battery model")
    common(sp)
    sp.add_argument("--schedule", required=True, help="schedule.json from the schedule command")
    plant(sp)
    sp.set_defaults(func=cmd_emulate)

    sp = sub.add_parser("compare", help="planned vs. realized report and plot data")
    common(sp)
    sp.add_argument("--schedule", required=True, help="schedule.json")
    sp.add_argument("--trace", required=True, help="trace.json from the emulate command")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("sweep", help="schedule, emulate and compare several scenarios")
    sp.add_argument("scenarios", nargs="+", metavar="SCENARIO", help=SCENARIO_HELP)
    sp.add_argument("--out", required=True, help="output directory, one subfolder per scenario")
    sp.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    plant(sp)
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
