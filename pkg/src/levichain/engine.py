"""
Containment engine: couples the drifting spill with the levitator field.

Each simulation step runs in a fixed order. First the spill moves. Then
every droplet gets a trap check: free droplets near a node plane whose
local pressure meets their threshold are captured, and trapped droplets
whose node pressure fell below threshold are released. Then any free
droplet outside the domain is marked escaped. Every ``every_n_steps``
steps the optional controller retunes unit power.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from levichain.control import ControllerState, control_step, sample_sensors
from levichain.field import ArpField, LevitatorUnit
from levichain.physics import (
    Environment,
    required_trapping_pressure,
    required_trapping_pressure_array,
)
from levichain.planner import BarrierPolyline, ChainPlan, barrier_from_forecast, plan_chain
from levichain.scenario import Scenario, scenario_digest, validate_scenario
from levichain.spill import Droplet, DropletState, SpillState, forecast_drift, seed_spill, step

logger = logging.getLogger(__name__)

TIMESERIES_COLUMNS = (
    "step", "t_s", "trapped_fraction", "escaped_fraction", "free_fraction",
    "trapped", "escaped", "free",
)
TELEMETRY_COLUMNS = ("t_s", "unit_id", "kind", "value", "frequency_hz", "noise_sigma", "power_scale")

POC_TRIALS = (("none", 30.0), ("low", 20.0), ("medium", 10.0), ("high", 10.0))


# ---- trapping ------------------------------------------------------------------

def _capture_distances(field: ArpField, capture_distance: Optional[float]) -> np.ndarray:
    if capture_distance is not None:
        return np.full(len(field), float(capture_distance))
    return field._wavelength / 4.0


def _trap_arrays(
    positions: np.ndarray,
    states: np.ndarray,
    trap_unit: np.ndarray,
    trap_node: np.ndarray,
    required: np.ndarray,
    field: ArpField,
    capture_distance: Optional[float] = None,
):
    """Vectorised trap check; returns new (positions, states, trap_unit, trap_node)."""
    positions = positions.copy()
    states = states.copy()
    trap_unit = trap_unit.copy()
    trap_node = trap_node.copy()
    if len(field) == 0:
        released = states == DropletState.TRAPPED
        states[released] = DropletState.FREE
        positions[released, 2] = 0.0
        trap_unit[released] = -1
        trap_node[released] = -1
        return positions, states, trap_unit, trap_node

    trapped_idx = np.flatnonzero(states == DropletState.TRAPPED)
    free_idx = np.flatnonzero(states == DropletState.FREE)

    # release: pressure at the node no longer holds the droplet
    if len(trapped_idx):
        local = _local_arp(positions[trapped_idx], required[trapped_idx], field)
        drop = trapped_idx[local < required[trapped_idx]]
        states[drop] = DropletState.FREE
        positions[drop, 2] = 0.0
        trap_unit[drop] = -1
        trap_node[drop] = -1

    if len(free_idx) == 0:
        return positions, states, trap_unit, trap_node

    pts = positions[free_idx]
    req = required[free_idx]
    cutoff = field.capture_cutoff(float(req.min()))
    pi, ui = field.candidate_pairs(pts[:, :2], cutoff)
    if len(pi) == 0:
        return positions, states, trap_unit, trap_node
    contrib = field.contribution(pts[pi], ui)
    node_k, node_z, vdist = field.nearest_node(pts[pi], ui)
    eligible = vdist <= _capture_distances(field, capture_distance)[ui]

    m = len(free_idx)
    local = np.zeros(m)
    np.maximum.at(local, pi, contrib)
    # best eligible pair per droplet: highest contribution, then lowest unit index
    score = np.where(eligible, contrib, -1.0)
    order = np.lexsort((ui, -score, pi))
    first = np.ones(len(order), dtype=bool)
    first[1:] = pi[order][1:] != pi[order][:-1]
    best = order[first]
    has_eligible = np.zeros(m, dtype=bool)
    has_eligible[pi[best]] = eligible[best]
    best_pair = np.full(m, -1)
    best_pair[pi[best]] = best

    capture = has_eligible & (local >= req)
    rows = np.flatnonzero(capture)
    if len(rows):
        pairs = best_pair[rows]
        units = ui[pairs]
        idx = free_idx[rows]
        axis = field._xy[units]
        offset = positions[idx, :2] - axis
        dist = np.hypot(offset[:, 0], offset[:, 1])
        rs = field._rs[units]
        shrink = np.where(dist > rs, rs / np.where(dist > 0, dist, 1.0), 1.0)
        positions[idx, :2] = axis + offset * shrink[:, None]
        positions[idx, 2] = node_z[pairs]
        states[idx] = DropletState.TRAPPED
        trap_unit[idx] = np.array([field.units[u].id for u in units])
        trap_node[idx] = node_k[pairs]
    return positions, states, trap_unit, trap_node


def _local_arp(points: np.ndarray, required: np.ndarray, field: ArpField) -> np.ndarray:
    """
    Field value at ``points``, skipping units too far away to reach ``required``.

    Exact for the comparison ``value >= required``.
    """
    cutoff = field.capture_cutoff(float(required.min()))
    out = np.zeros(len(points))
    pi, ui = field.candidate_pairs(points[:, :2], cutoff)
    if len(pi):
        np.maximum.at(out, pi, field.contribution(points[pi], ui))
    return out


def trap_check(
    droplet: Droplet,
    field: ArpField,
    env: Environment,
    capture_distance: Optional[float] = None,
) -> Droplet:
    """
    New state of a single droplet against ``field``.

    Free droplets within ``capture_distance`` (default a quarter wavelength)
    of a node plane are captured when the local pressure meets their
    threshold; trapped ones are released once their node pressure drops below it.
    """
    if droplet.state is DropletState.ESCAPED:
        return droplet
    required = np.array([required_trapping_pressure(droplet.radius, droplet.oil, env)])
    uid_to_idx = {u.id: i for i, u in enumerate(field.units)}
    tu = -1 if droplet.trap_unit is None else droplet.trap_unit
    if droplet.state is DropletState.TRAPPED and tu not in uid_to_idx:
        tu = -1
    pos, states, tu_arr, tn_arr = _trap_arrays(
        np.array([droplet.position], dtype=float),
        np.array([int(droplet.state)], dtype=np.int8),
        np.array([tu]),
        np.array([-1 if droplet.trap_node is None else droplet.trap_node]),
        required,
        field,
        capture_distance,
    )
    state = DropletState(int(states[0]))
    trapped = state is DropletState.TRAPPED
    return replace(
        droplet,
        position=tuple(float(v) for v in pos[0]),
        state=state,
        trap_unit=int(tu_arr[0]) if trapped else None,
        trap_node=int(tn_arr[0]) if trapped else None,
    )


def apply_trap_check(
    spill: SpillState, field: ArpField, env: Environment,
    required: Optional[np.ndarray] = None, capture_distance: Optional[float] = None,
) -> SpillState:
    if required is None:
        required = required_trapping_pressure_array(spill.radii, spill.oil, env)
    pos, states, tu, tn = _trap_arrays(
        spill.positions, spill.states, spill.trap_unit, spill.trap_node, required, field, capture_distance
    )
    return replace(spill, positions=pos, states=states, trap_unit=tu, trap_node=tn)


def apply_escape(spill: SpillState, bounds: Sequence[float]) -> SpillState:
    xmin, ymin, xmax, ymax = bounds
    x, y = spill.positions[:, 0], spill.positions[:, 1]
    out = (x < xmin) | (x > xmax) | (y < ymin) | (y > ymax)
    leaving = out & spill.free_mask()
    if not leaving.any():
        return spill
    states = spill.states.copy()
    states[leaving] = DropletState.ESCAPED
    return replace(spill, states=states)


# ---- reports -------------------------------------------------------------------

@dataclass
class SimReport:
    seed: int
    scenario_digest: str
    n_droplets: int
    steps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    trapped: list = field(default_factory=list)
    escaped: list = field(default_factory=list)
    free: list = field(default_factory=list)
    per_unit_trapped: dict = field(default_factory=dict)
    final_power_scale: dict = field(default_factory=dict)
    telemetry: list = field(default_factory=list)
    final_spill: Optional[SpillState] = field(default=None, repr=False, compare=False)
    final_units: tuple = field(default=(), repr=False, compare=False)

    def record(self, k: int, spill: SpillState) -> None:
        c = spill.counts()
        self.steps.append(k)
        self.times.append(spill.time)
        self.trapped.append(c["trapped"])
        self.escaped.append(c["escaped"])
        self.free.append(c["free"])

    def fractions(self, key: str) -> np.ndarray:
        return np.asarray(getattr(self, key), dtype=float) / self.n_droplets

    @property
    def final_counts(self) -> dict:
        return {"trapped": self.trapped[-1], "escaped": self.escaped[-1], "free": self.free[-1]}

    def summary(self) -> dict:
        n = self.n_droplets
        fc = self.final_counts
        return {
            "seed": self.seed,
            "scenario_digest": self.scenario_digest,
            "n_droplets": n,
            "n_samples": len(self.times),
            "final_time_s": self.times[-1],
            "final_counts": fc,
            "final_fractions": {k: v / n for k, v in fc.items()},
            "per_unit_trapped": {str(k): v for k, v in sorted(self.per_unit_trapped.items())},
            "final_power_scale": {str(k): v for k, v in sorted(self.final_power_scale.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def timeseries_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(TIMESERIES_COLUMNS)
        n = self.n_droplets
        for k, t, tr, es, fr in zip(self.steps, self.times, self.trapped, self.escaped, self.free):
            w.writerow([k, repr(t), repr(tr / n), repr(es / n), repr(fr / n), tr, es, fr])
        return buf.getvalue()

    def telemetry_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(TELEMETRY_COLUMNS)
        for row in self.telemetry:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
        return buf.getvalue()


@dataclass(frozen=True)
class TrialRecord:
    pressure_level: str
    initial_trapped_pct: float
    final_trapped_pct: float
    duration_min: float

    def to_dict(self) -> dict:
        return {
            "pressure_level": self.pressure_level,
            "initial_trapped_pct": self.initial_trapped_pct,
            "final_trapped_pct": self.final_trapped_pct,
            "duration_min": self.duration_min,
        }


# ---- orchestration -------------------------------------------------------------

def run(
    scenario: Scenario,
    seed: int,
    spill: Optional[SpillState] = None,
    units: Optional[Sequence[LevitatorUnit]] = None,
) -> SimReport:
    """
    Simulate ``scenario`` with ``seed``.

    ``spill`` and ``units`` continue an earlier run instead of seeding a new
    slick and taking the scenario's units (with any preset applied).
    """
    validate_scenario(scenario)
    env = scenario.env
    if spill is None:
        sc = scenario.spill
        spill = seed_spill(sc.origin, sc.count, sc.radius, scenario.oil, seed,
                           k_wind=sc.k_wind, diffusivity=sc.diffusivity)
    units = tuple(scenario.effective_units() if units is None else units)
    field = ArpField.build(units, env)
    required = required_trapping_pressure_array(spill.radii, spill.oil, env)

    report = SimReport(seed=int(seed), scenario_digest=scenario_digest(scenario), n_droplets=len(spill))
    ctrl = scenario.control
    controllers = [ControllerState.for_unit(u, ctrl) for u in units] if ctrl.enabled else []
    sensor_rng = np.random.default_rng([int(seed), 1])
    ctrl_required = required_trapping_pressure(ctrl.design_droplet_radius, scenario.oil, env)

    report.record(0, spill)
    for k in range(1, scenario.n_steps + 1):
        spill = step(spill, env, scenario.wind_dir, scenario.dt)
        spill = apply_trap_check(spill, field, env, required, scenario.capture_distance)
        spill = apply_escape(spill, scenario.domain_bounds)
        report.record(k, spill)
        if controllers and k % ctrl.every_n_steps == 0:
            new_units = []
            for c, u in zip(controllers, units):
                readings = sample_sensors(spill, field, u, env, sensor_rng, ctrl.sensors)
                nu = control_step(c, readings[0], ctrl_required, u)
                new_units.append(nu)
                for r in readings:
                    report.telemetry.append(
                        (r.timestamp, r.unit_id, r.kind.value, float(r.value),
                         r.frequency, r.noise_sigma, nu.power_scale)
                    )
            units = tuple(new_units)
            field = ArpField.build(units, env)

    trapped = spill.states == DropletState.TRAPPED
    report.per_unit_trapped = {
        u.id: int(np.count_nonzero(trapped & (spill.trap_unit == u.id))) for u in units
    }
    report.final_power_scale = {u.id: u.power_scale for u in units}
    report.final_spill = spill
    report.final_units = units
    return report


def run_poc_trials(base: Scenario, seed: int) -> tuple[list[TrialRecord], list[SimReport]]:
    """
    Four chained trials at None/Low/Medium/High pressure for 30/20/10/10 minutes.

    Each trial continues from the previous one's droplets, so its initial
    trapped share is the previous final share.
    """
    records, reports = [], []
    spill = None
    for level, minutes in POC_TRIALS:
        sc = replace(base, pressure_level=level, duration=minutes * 60.0)
        rep = run(sc, seed, spill=spill)
        n = rep.n_droplets
        records.append(TrialRecord(
            pressure_level=level,
            initial_trapped_pct=100.0 * rep.trapped[0] / n,
            final_trapped_pct=100.0 * rep.trapped[-1] / n,
            duration_min=minutes,
        ))
        reports.append(rep)
        spill = rep.final_spill
    return records, reports


def replicate_poc(base: Scenario, seed: int) -> list[TrialRecord]:
    return run_poc_trials(base, seed)[0]


# ---- planning ------------------------------------------------------------------

@dataclass(frozen=True)
class PlanResult:
    plan: ChainPlan
    barrier: BarrierPolyline
    forecast_centroid: tuple[float, float]
    forecast_radius_p90: float


def plan_scenario(scenario: Scenario) -> PlanResult:
    """Forecast the scenario's slick and place a chain around it."""
    sc, pc = scenario.spill, scenario.planner
    # droplets start at the origin, so the draw only affects radii, which the forecast ignores
    spill = seed_spill(sc.origin, sc.count, sc.radius, scenario.oil, 0,
                       k_wind=sc.k_wind, diffusivity=sc.diffusivity)
    centroid, radius = forecast_drift(spill, scenario.env, scenario.wind_dir, pc.forecast_horizon)
    barrier = barrier_from_forecast(centroid, radius, scenario.wind_dir, pc.arc_degrees,
                                    inflation=pc.inflation, chord_error=pc.chord_error)
    plan = plan_chain(barrier, pc.template, scenario.env, scenario.oil,
                      pc.design_droplet_radius, pc.overlap)
    return PlanResult(plan, barrier, centroid, radius)


def with_plan(scenario: Scenario, plan: ChainPlan) -> Scenario:
    """``scenario`` with its levitators replaced by the planned chain."""
    return replace(scenario, units=tuple(plan.units()))
