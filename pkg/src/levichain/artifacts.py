"""Run-directory writers: report.json, timeseries.csv, telemetry.csv, plan.json, trials."""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from levichain.engine import TIMESERIES_COLUMNS, PlanResult, SimReport, TrialRecord
from levichain.scenario import Scenario, dumps_scenario, scenario_digest, unit_to_dict

OUT_ENV_VAR = "LEVICHAIN_OUT"
DEFAULT_OUT = "levichain_out"


@dataclass(frozen=True)
class RunArtifacts:
    directory: Path
    report: Path
    timeseries: Optional[Path] = None
    telemetry: Optional[Path] = None
    plan: Optional[Path] = None
    resolved_scenario: Optional[Path] = None


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV_VAR, DEFAULT_OUT))


def _write(path: Path, text: str) -> Path:
    # newline="" keeps the CRLF record separators of the CSV writers intact
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    return path


def write_resolved(out: Path, scenario: Scenario, name: str = "scenario.resolved.json") -> Path:
    out.mkdir(parents=True, exist_ok=True)
    return _write(out / name, dumps_scenario(scenario))


def write_run(out: Path, scenario: Scenario, report: SimReport) -> RunArtifacts:
    out = Path(out)
    resolved = write_resolved(out, scenario)
    return RunArtifacts(
        directory=out,
        report=_write(out / "report.json", report.to_json()),
        timeseries=_write(out / "timeseries.csv", report.timeseries_csv()),
        telemetry=_write(out / "telemetry.csv", report.telemetry_csv()),
        resolved_scenario=resolved,
    )


def plan_document(result: PlanResult) -> dict:
    plan = result.plan
    return {
        "forecast": {
            "centroid_m": list(result.forecast_centroid),
            "radius_p90_m": result.forecast_radius_p90,
        },
        "barrier": {
            "closed": result.barrier.closed,
            "length_m": result.barrier.length,
            "vertices_m": [list(v) for v in result.barrier.vertices],
        },
        "spacing_m": plan.spacing,
        "capture_radius_m": plan.capture_radius,
        "coverage": plan.coverage,
        "n_units": len(plan.placements),
        "levitators": [unit_to_dict(u) for u in plan.units()],
    }


def write_plan(out: Path, scenario: Scenario, planned: Scenario, result: PlanResult) -> RunArtifacts:
    out = Path(out)
    resolved = write_resolved(out, scenario)
    write_resolved(out, planned, name="scenario.planned.json")
    doc = plan_document(result)
    plan_path = _write(out / "plan.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    summary = {
        "scenario_digest": scenario_digest(scenario),
        "planned_scenario_digest": scenario_digest(planned),
        "n_units": doc["n_units"],
        "coverage": doc["coverage"],
        "spacing_m": doc["spacing_m"],
        "capture_radius_m": doc["capture_radius_m"],
    }
    report = _write(out / "report.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return RunArtifacts(directory=out, report=report, plan=plan_path, resolved_scenario=resolved)


def trials_csv(records: Sequence[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["trial", "pressure_level", "initial_trapped_pct", "final_trapped_pct", "duration_min"])
    for i, r in enumerate(records, start=1):
        w.writerow([i, r.pressure_level, repr(r.initial_trapped_pct), repr(r.final_trapped_pct),
                    repr(r.duration_min)])
    return buf.getvalue()


def write_poc(out: Path, scenario: Scenario, seed: int,
              records: Sequence[TrialRecord], reports: Sequence[SimReport]) -> RunArtifacts:
    out = Path(out)
    resolved = write_resolved(out, scenario)
    summary = {
        "seed": seed,
        "scenario_digest": scenario_digest(scenario),
        "trials": [r.to_dict() for r in records],
    }
    report = _write(out / "report.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _write(out / "trials.csv", trials_csv(records))

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(("trial", "pressure_level") + TIMESERIES_COLUMNS)
    for i, (rec, rep) in enumerate(zip(records, reports), start=1):
        for row in csv.reader(io.StringIO(rep.timeseries_csv()).readlines()[1:]):
            w.writerow([i, rec.pressure_level] + row)
    ts = _write(out / "timeseries.csv", buf.getvalue())
    return RunArtifacts(directory=out, report=report, timeseries=ts, resolved_scenario=resolved)
