"""
Effective acoustic-radiation-pressure field of one or more levitator units.

Each unit is a transducer array facing a reflector plate across a vertical
gap. The standing wave between them has trapping nodes spaced half a
wavelength apart, the first a quarter wavelength off the reflector. The
field of a unit is separable: an axial ``sin²`` profile whose maxima sit on
the nodes, times a radial Gaussian whose width comes from the aperture. Its
peak is the radiation pressure of the unit's total power spread over the
aperture. Several units combine by taking the maximum, not the sum.

Coordinates: ``x, y`` on the water surface, ``z`` depth below the surface
(positive down). A unit's transducer plane sits at ``z = depth_setpoint``
and its reflector at ``z = depth_setpoint + reflector_gap``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from levichain.physics import Environment, acoustic_intensity, arp_from_intensity

logger = logging.getLogger(__name__)

FREQUENCY_BAND = (20e3, 100e3)
PREFERRED_BAND = (40e3, 60e3)
DEFAULT_MAX_POWER_SCALE = 32.0

# Dense unit×point evaluation below this many units, KD-tree neighbourhoods above.
_DENSE_UNIT_LIMIT = 64


class NoTrappingNodeError(ValueError):
    """The reflector gap is too short to hold a single node."""


class FrequencyOutOfBandError(ValueError):
    """Requested node spacing needs a frequency outside the validated band."""

    def __init__(self, message: str, nearest_spacing: float, nearest_frequency: float):
        super().__init__(message)
        self.nearest_spacing = nearest_spacing
        self.nearest_frequency = nearest_frequency


@dataclass(frozen=True)
class LevitatorUnit:
    """
    One semi-submersible levitator.

    Attributes:
        id: Unit identifier
        position: (x, y) of the unit axis on the water surface [m]
        heading: Orientation of the float [rad]
        num_transducers: Number of transducers in the array
        power_per_transducer: Electrical-to-acoustic output per transducer [W]
        frequency: Drive frequency [Hz]
        aperture_area: Area the array focuses onto [m²]
        reflector_gap: Transducer plane to reflector plate distance [m]
        depth_setpoint: Depth of the transducer plane, held by the floats [m];
            negative values put the head above the waterline
        power_scale: Feedback-controlled multiplier on total power
        max_power_scale: Ceiling for ``power_scale``
    """

    id: int
    position: tuple[float, float]
    heading: float = 0.0
    num_transducers: int = 14
    power_per_transducer: float = 1.0
    frequency: float = 40e3
    aperture_area: float = 0.1
    reflector_gap: float = 0.05
    depth_setpoint: float = 0.0
    power_scale: float = 1.0
    max_power_scale: float = DEFAULT_MAX_POWER_SCALE

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        if self.num_transducers < 1:
            raise ValueError("a unit needs at least one transducer")
        if not self.power_per_transducer > 0:
            raise ValueError("power per transducer must be positive")
        if not self.aperture_area > 0:
            raise ValueError("aperture area must be positive")
        if not self.reflector_gap > 0:
            raise ValueError("reflector gap must be positive")
        lo, hi = FREQUENCY_BAND
        if not lo <= self.frequency <= hi:
            raise ValueError(f"frequency {self.frequency} Hz outside [{lo:g}, {hi:g}] Hz")
        if not self.max_power_scale >= 0:
            raise ValueError("max_power_scale must be non-negative")
        if not 0 <= self.power_scale <= self.max_power_scale:
            raise ValueError(
                f"power_scale {self.power_scale} outside [0, {self.max_power_scale}]"
            )

    @property
    def total_power(self) -> float:
        return self.power_scale * self.num_transducers * self.power_per_transducer

    @property
    def radial_scale(self) -> float:
        """Effective beam radius sqrt(aperture/π) [m]."""
        return math.sqrt(self.aperture_area / math.pi)

    def wavelength(self, env: Environment) -> float:
        return env.sound_speed / self.frequency


@dataclass(frozen=True)
class NodeGeometry:
    node_offsets: tuple[float, ...]  # distance from the reflector plate, ascending
    spacing: float

    def __len__(self):
        return len(self.node_offsets)


def node_geometry(unit: LevitatorUnit, env: Environment) -> NodeGeometry:
    """Trapping nodes between the transducer plane and the reflector."""
    wavelength = unit.wavelength(env)
    spacing = wavelength / 2.0
    first = wavelength / 4.0
    if not first < unit.reflector_gap:
        raise NoTrappingNodeError(
            f"no trapping node fits: quarter wavelength {first:.6g} m "
            f">= reflector gap {unit.reflector_gap:.6g} m"
        )
    offsets = []
    k = 0
    while True:
        offset = first + k * spacing
        if offset >= unit.reflector_gap:
            break
        offsets.append(offset)
        k += 1
    return NodeGeometry(node_offsets=tuple(offsets), spacing=spacing)


def node_depths(unit: LevitatorUnit, env: Environment) -> np.ndarray:
    """World depth z of every node, indexed like ``node_geometry().node_offsets``."""
    offsets = np.asarray(node_geometry(unit, env).node_offsets)
    return unit.depth_setpoint + unit.reflector_gap - offsets


def surface_aligned_depth(unit: LevitatorUnit, env: Environment) -> float:
    """depth_setpoint that puts the node nearest the transducers exactly on the surface."""
    geom = node_geometry(unit, env)
    return geom.node_offsets[-1] - unit.reflector_gap


def unit_peak_arp(unit: LevitatorUnit, env: Environment) -> float:
    """Radiation pressure at a node on the unit axis [Pa]."""
    intensity = acoustic_intensity(unit.total_power, unit.aperture_area)
    return arp_from_intensity(intensity, env.sound_speed)


def tune_frequency(
    unit: LevitatorUnit,
    target_spacing: float,
    env: Environment,
    band: tuple[float, float] = FREQUENCY_BAND,
) -> LevitatorUnit:
    """
    Retune ``unit`` so adjacent nodes are ``target_spacing`` apart.

    Raises FrequencyOutOfBandError (carrying the nearest achievable spacing)
    when the needed frequency falls outside ``band``. Frequencies inside the
    band but outside 40–60 kHz are accepted with a warning.
    """
    if not target_spacing > 0:
        raise ValueError("target spacing must be positive")
    freq = env.sound_speed / (2.0 * target_spacing)
    lo, hi = band
    if not lo <= freq <= hi:
        nearest_f = min(max(freq, lo), hi)
        nearest = env.sound_speed / (2.0 * nearest_f)
        raise FrequencyOutOfBandError(
            f"spacing {target_spacing:.6g} m needs {freq:.6g} Hz, outside "
            f"[{lo:g}, {hi:g}] Hz; nearest achievable spacing is {nearest:.6g} m",
            nearest_spacing=nearest,
            nearest_frequency=nearest_f,
        )
    if not PREFERRED_BAND[0] <= freq <= PREFERRED_BAND[1]:
        logger.warning("unit %s tuned to %.6g Hz, outside the 40-60 kHz band", unit.id, freq)
    return replace(unit, frequency=freq)


@dataclass(frozen=True)
class ArpField:
    """
    Immutable ARP field of a set of units in a medium.

    Build with :meth:`build`; query with :meth:`arp_at` or :meth:`arp_at_many`.
    """

    units: tuple[LevitatorUnit, ...]
    medium: Environment
    radial_scales: tuple[float, ...]
    peak_arp_per_unit: tuple[float, ...]
    _xy: np.ndarray = field(repr=False, compare=False)
    _depth: np.ndarray = field(repr=False, compare=False)
    _gap: np.ndarray = field(repr=False, compare=False)
    _wavelength: np.ndarray = field(repr=False, compare=False)
    _rs: np.ndarray = field(repr=False, compare=False)
    _peak: np.ndarray = field(repr=False, compare=False)
    _n_nodes: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def build(cls, units: Sequence[LevitatorUnit], env: Environment) -> "ArpField":
        units = tuple(units)
        rs = tuple(u.radial_scale for u in units)
        peaks = tuple(unit_peak_arp(u, env) for u in units)
        n_nodes = [len(node_geometry(u, env)) for u in units]
        return cls(
            units=units,
            medium=env,
            radial_scales=rs,
            peak_arp_per_unit=peaks,
            _xy=np.array([u.position for u in units], dtype=float).reshape(-1, 2),
            _depth=np.array([u.depth_setpoint for u in units], dtype=float),
            _gap=np.array([u.reflector_gap for u in units], dtype=float),
            _wavelength=np.array([u.wavelength(env) for u in units], dtype=float),
            _rs=np.array(rs, dtype=float),
            _peak=np.array(peaks, dtype=float),
            _n_nodes=np.array(n_nodes, dtype=int),
        )

    def __len__(self):
        return len(self.units)

    def with_units(self, units: Sequence[LevitatorUnit]) -> "ArpField":
        return ArpField.build(units, self.medium)

    def contribution(self, points: np.ndarray, unit_idx: np.ndarray) -> np.ndarray:
        """
        Pairwise contribution of unit ``unit_idx[i]`` at ``points[i]``.

        ``points`` has shape (m, 3) and ``unit_idx`` shape (m,).
        """
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        unit_idx = np.asarray(unit_idx, dtype=int)
        d_axial = points[:, 2] - self._depth[unit_idx]
        gap = self._gap[unit_idx]
        from_reflector = gap - d_axial
        inside = (from_reflector >= 0.0) & (from_reflector <= gap)
        axial = np.sin(2.0 * np.pi * from_reflector / self._wavelength[unit_idx]) ** 2
        d_radial_sq = np.sum((points[:, :2] - self._xy[unit_idx]) ** 2, axis=1)
        radial = np.exp(-d_radial_sq / self._rs[unit_idx] ** 2)
        return np.where(inside, self._peak[unit_idx] * axial * radial, 0.0)

    def arp_at_many(self, points: np.ndarray) -> np.ndarray:
        """Field value (max over units) at each of ``points`` (shape (m, 3))."""
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        out = np.zeros(len(points))
        if not self.units or not len(points):
            return out
        n_units = len(self.units)
        chunk = max(1, 2_000_000 // n_units)
        for start in range(0, len(points), chunk):
            block = points[start:start + chunk]
            m = len(block)
            pts = np.repeat(block, n_units, axis=0)
            idx = np.tile(np.arange(n_units), m)
            out[start:start + m] = self.contribution(pts, idx).reshape(m, n_units).max(axis=1)
        return out

    def candidate_pairs(self, xy: np.ndarray, cutoff: float) -> tuple[np.ndarray, np.ndarray]:
        """
        (point index, unit index) pairs whose horizontal distance is within ``cutoff``.

        Units further away than ``cutoff`` are skipped, which is exact for any
        threshold decision whose cutoff was derived from that threshold.
        """
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        n_units = len(self.units)
        if n_units == 0 or len(xy) == 0 or not cutoff > 0:
            return np.empty(0, dtype=int), np.empty(0, dtype=int)
        if n_units <= _DENSE_UNIT_LIMIT:
            d2 = np.sum((xy[:, None, :] - self._xy[None, :, :]) ** 2, axis=2)
            pi, ui = np.nonzero(d2 <= cutoff**2)
            return pi, ui
        tree = cKDTree(self._xy)
        hits = tree.query_ball_point(xy, r=cutoff)
        lengths = np.fromiter((len(h) for h in hits), dtype=int, count=len(hits))
        pi = np.repeat(np.arange(len(xy)), lengths)
        ui = np.fromiter((u for h in hits for u in sorted(h)), dtype=int, count=int(lengths.sum()))
        return pi, ui

    def capture_cutoff(self, min_required: float) -> float:
        """Horizontal distance beyond which no unit reaches ``min_required`` Pa."""
        if not self.units:
            return 0.0
        if min_required <= 0:
            return math.inf
        ratio = self._peak / min_required
        reach = np.where(ratio > 1.0, self._rs * np.sqrt(np.log(np.maximum(ratio, 1.0))), 0.0)
        return float(reach.max()) * (1.0 + 1e-9) + 1e-12

    def nearest_node(self, points: np.ndarray, unit_idx: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Nearest in-water node of unit ``unit_idx[i]`` to ``points[i]``.

        Returns (node index, node depth, vertical distance). Nodes above the
        waterline are not eligible; if a unit has none in water the distance is inf.
        """
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        unit_idx = np.asarray(unit_idx, dtype=int)
        lam = self._wavelength[unit_idx]
        gap = self._gap[unit_idx]
        depth = self._depth[unit_idx]
        n_nodes = self._n_nodes[unit_idx]
        from_reflector = gap - (points[:, 2] - depth)
        k = np.rint((from_reflector - lam / 4.0) / (lam / 2.0)).astype(int)
        # deepest node above the waterline limits the top of the usable range
        top_wet = np.floor((gap + depth - lam / 4.0) / (lam / 2.0) + 1e-9).astype(int)
        k_max = np.minimum(n_nodes - 1, top_wet)
        k = np.clip(k, 0, np.maximum(k_max, 0))
        z_node = depth + gap - (lam / 4.0 + k * (lam / 2.0))
        dist = np.abs(points[:, 2] - z_node)
        dist = np.where(k_max >= 0, dist, np.inf)
        return k, np.maximum(z_node, 0.0), dist


def arp_at(field: ArpField, point: Sequence[float]) -> float:
    """Field value at a single (x, y, z) point [Pa]."""
    return float(field.arp_at_many(np.asarray(point, dtype=float).reshape(1, 3))[0])
