"""
Chain placement around a forecast spill perimeter.

A barrier polyline (usually an arc around the forecast slick) is covered
with units at equal arc-length spacing derived from each unit's capture
radius, the distance from its axis at which node-plane pressure drops to
the trapping threshold of a design droplet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from levichain.field import LevitatorUnit, unit_peak_arp
from levichain.physics import Environment, OilType, required_trapping_pressure

COVERAGE_SAMPLE_STEP = 0.01  # m of arc per coverage sample


class PlanningError(ValueError):
    pass


@dataclass(frozen=True)
class PlannerConfig:
    arc_degrees: float = 360.0
    inflation: float = 1.2
    overlap: float = 0.0
    design_droplet_radius: float = 1e-3
    forecast_horizon: float = 600.0  # s
    chord_error: float = 1.0  # m, max sagitta of the arc discretisation
    template: LevitatorUnit = field(default_factory=lambda: LevitatorUnit(id=0, position=(0.0, 0.0)))

    def __post_init__(self):
        if not 0 < self.arc_degrees <= 360:
            raise ValueError("arc_degrees must be in (0, 360]")
        if not self.inflation > 0:
            raise ValueError("inflation must be positive")
        if not 0 <= self.overlap <= 0.9:
            raise ValueError("overlap must be in [0, 0.9]")
        if not self.design_droplet_radius > 0:
            raise ValueError("design droplet radius must be positive")
        if self.forecast_horizon < 0:
            raise ValueError("forecast horizon must be non-negative")
        if not self.chord_error > 0:
            raise ValueError("chord error must be positive")


@dataclass(frozen=True)
class BarrierPolyline:
    vertices: tuple[tuple[float, float], ...]
    closed: bool = False

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 2:
            raise ValueError("a barrier needs at least two vertices")
        seg = self.segment_lengths()
        if np.any(seg <= 0):
            raise ValueError("barrier has a zero-length segment")

    def _ring(self) -> np.ndarray:
        v = np.asarray(self.vertices)
        return np.vstack([v, v[:1]]) if self.closed else v

    def segment_lengths(self) -> np.ndarray:
        return np.hypot(*np.diff(self._ring(), axis=0).T)

    @property
    def length(self) -> float:
        return float(self.segment_lengths().sum())

    def point_at(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Points and tangent headings at arc-lengths ``s`` along the polyline."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        ring = self._ring()
        seg = self.segment_lengths()
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        i = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
        frac = (s - cum[i]) / seg[i]
        a, b = ring[i], ring[i + 1]
        pts = a + (b - a) * frac[:, None]
        heading = np.arctan2(b[:, 1] - a[:, 1], b[:, 0] - a[:, 0])
        return pts, heading

    def distance_to(self, points: np.ndarray) -> np.ndarray:
        """Euclidean distance from each point to the polyline."""
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        ring = self._ring()
        a, b = ring[:-1], ring[1:]
        ab = b - a
        t = np.einsum("psk,sk->ps", p[:, None, :] - a[None], ab) / np.sum(ab * ab, axis=1)
        t = np.clip(t, 0.0, 1.0)
        proj = a[None] + t[..., None] * ab[None]
        return np.min(np.linalg.norm(p[:, None, :] - proj, axis=2), axis=1)


@dataclass(frozen=True)
class ChainPlan:
    placements: tuple[tuple[float, float, float], ...]  # (x, y, heading)
    template: LevitatorUnit
    spacing: float
    capture_radius: float
    coverage: float

    def __post_init__(self):
        if not 0 <= self.coverage <= 1:
            raise ValueError("coverage must be in [0, 1]")

    def units(self, first_id: int = 0) -> list[LevitatorUnit]:
        return [
            replace(self.template, id=first_id + i, position=(x, y), heading=h)
            for i, (x, y, h) in enumerate(self.placements)
        ]


def barrier_from_forecast(
    centroid: tuple[float, float],
    radius_p90: float,
    wind_dir: float,
    arc_degrees: float = 360.0,
    inflation: float = 1.2,
    chord_error: float = 1.0,
) -> BarrierPolyline:
    """
    Arc of radius ``inflation·radius_p90`` around ``centroid``, bisected by the
    downwind direction and discretised so no chord strays more than
    ``chord_error`` from the true arc.
    """
    if not radius_p90 > 0:
        raise ValueError("forecast radius must be positive")
    if not 0 < arc_degrees <= 360:
        raise ValueError("arc_degrees must be in (0, 360]")
    radius = inflation * radius_p90
    arc = math.radians(arc_degrees)
    if chord_error >= radius:
        max_angle = math.pi / 2
    else:
        max_angle = min(math.pi / 2, 2.0 * math.acos(1.0 - chord_error / radius))
    closed = arc_degrees == 360
    n_seg = max(3 if closed else 1, math.ceil(arc / max_angle))
    if closed:
        angles = wind_dir + np.arange(n_seg) * (arc / n_seg)
    else:
        angles = wind_dir - arc / 2 + np.arange(n_seg + 1) * (arc / n_seg)
    verts = [(centroid[0] + radius * math.cos(a), centroid[1] + radius * math.sin(a)) for a in angles]
    return BarrierPolyline(tuple(verts), closed=closed)


def capture_radius(
    template: LevitatorUnit, env: Environment, oil: OilType, design_droplet_radius: float
) -> float:
    """Radius at which node-plane ARP equals the design droplet's trapping threshold."""
    required = required_trapping_pressure(design_droplet_radius, oil, env)
    peak = unit_peak_arp(template, env)
    if peak <= required:
        peak_max = unit_peak_arp(replace(template, power_scale=template.max_power_scale), env)
        if peak_max <= required:
            raise PlanningError(
                f"unit cannot trap design droplet at any power: peak {peak_max:.4g} Pa at "
                f"max power_scale <= required {required:.4g} Pa"
            )
        need = template.power_scale * required / peak if peak > 0 else math.nan
        raise PlanningError(
            f"unit cannot trap design droplet at power_scale {template.power_scale:g} "
            f"(peak {peak:.4g} Pa <= required {required:.4g} Pa); raise power_scale above {need:.4g}"
        )
    return template.radial_scale * math.sqrt(math.log(peak / required))


def _placements(barrier: BarrierPolyline, spacing: float) -> list[tuple[float, float, float]]:
    length = barrier.length
    n = math.ceil(length / spacing - 1e-12)
    n = max(n, 1)
    step_len = length / n
    if barrier.closed:
        s = np.arange(n) * step_len
    else:
        s = (np.arange(n) + 0.5) * step_len
    pts, heading = barrier.point_at(s)
    return [(float(p[0]), float(p[1]), float(h)) for p, h in zip(pts, heading)]


def plan_chain(
    barrier: BarrierPolyline,
    template: LevitatorUnit,
    env: Environment,
    oil: OilType,
    design_droplet_radius: float = 1e-3,
    overlap: float = 0.0,
) -> ChainPlan:
    """Equal arc-length placement at spacing 2·capture_radius·(1 − overlap)."""
    if not 0 <= overlap <= 0.9:
        raise ValueError("overlap must be in [0, 0.9]")
    rho = capture_radius(template, env, oil, design_droplet_radius)
    spacing = 2.0 * rho * (1.0 - overlap)
    placements = _placements(barrier, spacing)
    plan = ChainPlan(tuple(placements), template, spacing, rho, 0.0)
    cov = coverage_fraction(plan, barrier, design_droplet_radius, env, oil)
    return replace(plan, coverage=cov)


def coverage_fraction(
    plan: ChainPlan,
    barrier: BarrierPolyline,
    design_droplet_radius: float,
    env: Environment,
    oil: OilType,
    sample_step: float = COVERAGE_SAMPLE_STEP,
) -> float:
    """Share of barrier arc-length within the capture radius of a placed unit."""
    if not plan.placements:
        return 0.0
    rho = capture_radius(plan.template, env, oil, design_droplet_radius)
    length = barrier.length
    m = max(1, math.ceil(length / sample_step))
    samples, _ = barrier.point_at((np.arange(m) + 0.5) * (length / m))
    tree = cKDTree(np.asarray([p[:2] for p in plan.placements]))
    dist, _ = tree.query(samples, k=1)
    return float(np.count_nonzero(dist <= rho)) / m


def remove_units(plan: ChainPlan, keep: Sequence[int]) -> ChainPlan:
    """Copy of ``plan`` keeping only the placements at indices ``keep``; coverage reset to 0."""
    return replace(plan, placements=tuple(plan.placements[i] for i in keep), coverage=0.0)
