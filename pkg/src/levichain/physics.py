"""
Closed-form physics: spill rate, acoustic intensity, radiation pressure,
buoyant radiation force and the pressure needed to hold a droplet at a node.

All quantities are SI. Functions are pure and operate on the immutable
``OilType`` / ``Environment`` value types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GRAVITY = 9.81
SEAWATER_SOUND_SPEED = 1480.0
AIR_SOUND_SPEED = 343.0


@dataclass(frozen=True)
class OilType:
    """
    Material constants of the spilled oil.

    Attributes:
        name: Label for reports
        density: Oil density [kg/m³]
        viscosity: Dynamic viscosity [Pa·s]
    """

    name: str
    density: float
    viscosity: float

    def __post_init__(self):
        if not self.density > 0:
            raise ValueError("oil density must be positive")
        if not self.viscosity > 0:
            raise ValueError("oil viscosity must be positive")


@dataclass(frozen=True)
class Environment:
    """
    Medium constants.

    Attributes:
        wind_speed: Surface wind speed [m/s]
        water_density: Water density [kg/m³]
        sound_speed: Speed of sound in the propagation medium [m/s]
        gravity: Gravitational acceleration [m/s²]
        spreading_constant: Dimensionless spreading constant of the spill-rate formula
    """

    wind_speed: float = 0.0
    water_density: float = 1025.0
    sound_speed: float = SEAWATER_SOUND_SPEED
    gravity: float = GRAVITY
    spreading_constant: float = 1.0

    def __post_init__(self):
        if not self.water_density > 0:
            raise ValueError("water density must be positive")
        if not self.sound_speed > 0:
            raise ValueError("sound speed must be positive")
        if not self.gravity > 0:
            raise ValueError("gravity must be positive")
        if not self.wind_speed >= 0:
            raise ValueError("wind speed must be non-negative")
        if not self.spreading_constant > 0:
            raise ValueError("spreading constant must be positive")


def oil_spill_rate_paper(env: Environment, oil: OilType) -> float:
    """Spill rate A·W·(η/ρo − 1/ρw), evaluated as written (mixed units, usually negative)."""
    return env.spreading_constant * env.wind_speed * (
        oil.viscosity / oil.density - 1.0 / env.water_density
    )


def oil_spill_rate_effective(env: Environment, oil: OilType) -> float:
    """Non-negative spreading driver [1/s]: magnitude of :func:`oil_spill_rate_paper`."""
    return env.spreading_constant * env.wind_speed * abs(
        oil.viscosity / oil.density - 1.0 / env.water_density
    )


def acoustic_intensity(total_power: float, focus_area: float) -> float:
    """Intensity [W/m²] of ``total_power`` watts spread over ``focus_area`` m²."""
    if not focus_area > 0:
        raise ValueError(f"focus area must be positive, got {focus_area!r}")
    if total_power < 0:
        raise ValueError(f"total power must be non-negative, got {total_power!r}")
    return total_power / focus_area


def arp_from_intensity(intensity: float, sound_speed: float) -> float:
    """Acoustic radiation pressure 2I/c [Pa]."""
    if not sound_speed > 0:
        raise ValueError(f"sound speed must be positive, got {sound_speed!r}")
    if intensity < 0:
        raise ValueError(f"intensity must be non-negative, got {intensity!r}")
    return 2.0 * intensity / sound_speed


def buoyant_arf(radius: float, oil: OilType, env: Environment) -> float:
    """
    Net buoyant force [N] on a spherical droplet that the trap has to oppose.

    Uses the magnitude of the density contrast, so light and heavy oils both
    give a non-negative force.
    """
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius!r}")
    return (4.0 * math.pi * radius**3 * env.gravity / 3.0) * abs(
        env.water_density - oil.density
    )


def required_trapping_pressure(radius: float, oil: OilType, env: Environment) -> float:
    """Pressure [Pa] whose force over the droplet cross-section πr² balances :func:`buoyant_arf`."""
    if not radius > 0:
        raise ValueError(f"radius must be positive to define a cross-section, got {radius!r}")
    return buoyant_arf(radius, oil, env) / (math.pi * radius**2)


def required_trapping_pressure_array(radii, oil: OilType, env: Environment) -> np.ndarray:
    """:func:`required_trapping_pressure` per element, bit-identical to the scalar path."""
    radii = np.asarray(radii, dtype=float)
    return np.fromiter(
        (required_trapping_pressure(float(r), oil, env) for r in radii.ravel()),
        dtype=float,
        count=radii.size,
    ).reshape(radii.shape)
