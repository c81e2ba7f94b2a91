"""
Lagrangian droplet spill: seeding, wind drift plus diffusion, and a
closed-form drift/spread forecast.

Droplets are stored column-wise in numpy arrays inside an immutable
``SpillState``; ``step`` returns a new state. The random stream is carried
as a PCG64 state dict so that stepping the same state twice gives the same
result.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Iterator, Optional

import numpy as np

from levichain.physics import Environment, OilType, oil_spill_rate_effective

DEFAULT_K_WIND = 0.03
DEFAULT_DIFFUSIVITY = 0.01  # m²/s
# 90th percentile of a 2-D isotropic Gaussian radius, in units of sqrt(MSD)
P90_RADIAL_FACTOR = math.sqrt(math.log(10.0))


class DropletState(enum.IntEnum):
    FREE = 0
    TRAPPED = 1
    ESCAPED = 2


@dataclass(frozen=True)
class Droplet:
    """Single-droplet view of a row in ``SpillState``."""

    id: int
    position: tuple[float, float, float]
    radius: float
    oil: OilType
    state: DropletState = DropletState.FREE
    trap_unit: Optional[int] = None
    trap_node: Optional[int] = None

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("droplet radius must be positive")
        if self.position[2] < 0:
            raise ValueError("droplet depth must be non-negative")


@dataclass(frozen=True)
class RadiusSpec:
    """Droplet radius distribution: fixed, or lognormal(median, sigma)."""

    fixed: Optional[float] = None
    median: Optional[float] = None
    sigma: Optional[float] = None

    def __post_init__(self):
        if self.fixed is not None:
            if self.median is not None or self.sigma is not None:
                raise ValueError("radius spec is either fixed or lognormal, not both")
            if not self.fixed > 0:
                raise ValueError("fixed radius must be positive")
        else:
            if self.median is None or self.sigma is None:
                raise ValueError("lognormal radius spec needs median and sigma")
            if not self.median > 0 or not self.sigma > 0:
                raise ValueError("lognormal median and sigma must be positive")

    @classmethod
    def lognormal(cls, median: float, sigma: float) -> "RadiusSpec":
        return cls(median=median, sigma=sigma)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.fixed is not None:
            return np.full(count, float(self.fixed))
        return rng.lognormal(mean=math.log(self.median), sigma=self.sigma, size=count)


@dataclass(frozen=True, eq=False)
class SpillState:
    ids: np.ndarray
    positions: np.ndarray  # (n, 3): x, y, depth
    radii: np.ndarray
    states: np.ndarray  # DropletState codes, int8
    trap_unit: np.ndarray  # unit id, -1 when not trapped
    trap_node: np.ndarray  # node index, -1 when not trapped
    oil: OilType
    time: float
    origin: tuple[float, float]
    rng_seed: int
    rng_state: dict
    effective_rate: float = 0.0
    k_wind: float = DEFAULT_K_WIND
    diffusivity: float = DEFAULT_DIFFUSIVITY

    def __len__(self):
        return len(self.ids)

    def rng(self) -> np.random.Generator:
        bitgen = np.random.PCG64()
        bitgen.state = self.rng_state
        return np.random.Generator(bitgen)

    def counts(self) -> dict[str, int]:
        return {
            "free": int(np.count_nonzero(self.states == DropletState.FREE)),
            "trapped": int(np.count_nonzero(self.states == DropletState.TRAPPED)),
            "escaped": int(np.count_nonzero(self.states == DropletState.ESCAPED)),
        }

    def droplet(self, i: int) -> Droplet:
        state = DropletState(int(self.states[i]))
        trapped = state is DropletState.TRAPPED
        return Droplet(
            id=int(self.ids[i]),
            position=tuple(float(v) for v in self.positions[i]),
            radius=float(self.radii[i]),
            oil=self.oil,
            state=state,
            trap_unit=int(self.trap_unit[i]) if trapped else None,
            trap_node=int(self.trap_node[i]) if trapped else None,
        )

    def droplets(self) -> Iterator[Droplet]:
        for i in range(len(self)):
            yield self.droplet(i)

    def free_mask(self) -> np.ndarray:
        return self.states == DropletState.FREE

    def diffusion_coefficient(self, time: Optional[float] = None) -> float:
        """D = D0·(1 + rate·t): spreading grows with the effective spill rate."""
        t = self.time if time is None else time
        return self.diffusivity * (1.0 + self.effective_rate * t)

    def same_as(self, other: "SpillState") -> bool:
        return (
            np.array_equal(self.ids, other.ids)
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.radii, other.radii)
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.trap_unit, other.trap_unit)
            and np.array_equal(self.trap_node, other.trap_node)
            and self.time == other.time
            and self.rng_state == other.rng_state
            and self.effective_rate == other.effective_rate
        )


def seed_spill(
    origin: tuple[float, float],
    count: int,
    radius_spec: RadiusSpec,
    oil: OilType,
    seed: int,
    k_wind: float = DEFAULT_K_WIND,
    diffusivity: float = DEFAULT_DIFFUSIVITY,
) -> SpillState:
    """``count`` free surface droplets at ``origin``; radii drawn from ``seed``."""
    if count < 1:
        raise ValueError(f"droplet count must be at least 1, got {count}")
    if k_wind < 0 or diffusivity < 0:
        raise ValueError("k_wind and diffusivity must be non-negative")
    rng = np.random.default_rng(seed)
    radii = radius_spec.sample(rng, count)
    positions = np.zeros((count, 3))
    positions[:, 0] = origin[0]
    positions[:, 1] = origin[1]
    return SpillState(
        ids=np.arange(count),
        positions=positions,
        radii=radii,
        states=np.zeros(count, dtype=np.int8),
        trap_unit=np.full(count, -1),
        trap_node=np.full(count, -1),
        oil=oil,
        time=0.0,
        origin=(float(origin[0]), float(origin[1])),
        rng_seed=int(seed),
        rng_state=rng.bit_generator.state,
        k_wind=float(k_wind),
        diffusivity=float(diffusivity),
    )


def step(spill: SpillState, env: Environment, wind_dir: float, dt: float) -> SpillState:
    """
    Advance free droplets by wind drift plus Gaussian diffusion over ``dt``.

    Two normal draws are taken per droplet in id order whatever its state,
    so each droplet's noise sequence does not depend on what the others did.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    rate = oil_spill_rate_effective(env, spill.oil)
    spill = replace(spill, effective_rate=rate)
    rng = spill.rng()
    noise = rng.standard_normal((len(spill), 2))
    diff_std = math.sqrt(2.0 * spill.diffusion_coefficient() * dt)
    drift = spill.k_wind * env.wind_speed * dt
    free = spill.free_mask()
    positions = spill.positions.copy()
    positions[free, 0] += drift * math.cos(wind_dir) + diff_std * noise[free, 0]
    positions[free, 1] += drift * math.sin(wind_dir) + diff_std * noise[free, 1]
    return replace(
        spill,
        positions=positions,
        time=spill.time + dt,
        rng_state=rng.bit_generator.state,
    )


def centroid(spill: SpillState, free_only: bool = True) -> tuple[float, float]:
    mask = spill.free_mask() if free_only else np.ones(len(spill), dtype=bool)
    if not mask.any():
        mask = np.ones(len(spill), dtype=bool)
    c = spill.positions[mask, :2].mean(axis=0)
    return float(c[0]), float(c[1])


def forecast_drift(
    spill: SpillState, env: Environment, wind_dir: float, horizon: float
) -> tuple[tuple[float, float], float]:
    """
    Forecast (centroid, 90th-percentile radius) of the free slick ``horizon`` s ahead.

    The spread term uses the diffusion coefficient averaged over the horizon,
    which is exact for the linear-in-time growth used by ``step``.
    """
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    mask = spill.free_mask()
    if not mask.any():
        mask = np.ones(len(spill), dtype=bool)
    cx, cy = centroid(spill)
    r = np.hypot(spill.positions[mask, 0] - cx, spill.positions[mask, 1] - cy)
    p90 = float(np.percentile(r, 90))
    if horizon == 0:
        return (cx, cy), p90
    rate = oil_spill_rate_effective(env, spill.oil)
    d_mean = spill.diffusivity * (1.0 + rate * (spill.time + horizon / 2.0))
    shift = spill.k_wind * env.wind_speed * horizon
    future = (cx + shift * math.cos(wind_dir), cy + shift * math.sin(wind_dir))
    return future, p90 + math.sqrt(4.0 * d_mean * horizon) * P90_RADIAL_FACTOR
