"""
Emulated feedback sensors and the per-unit power controller.

The controller only moves ``power_scale``; it tries to hold the pressure
measured at the unit's first node at ``target_margin`` times the trapping
threshold of the design droplet.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from levichain.field import ArpField, LevitatorUnit, arp_at, node_depths, unit_peak_arp
from levichain.physics import Environment
from levichain.spill import SpillState

PRESSURE_FLOOR = 1e-6  # Pa, guards the relative error against division by zero


class SensorKind(str, enum.Enum):
    PRESSURE = "pressure"
    TEMPERATURE = "temperature"
    HYDROPHONE = "hydrophone"
    DISSOLVED_OXYGEN = "dissolved_oxygen"
    OIL_CONTENT = "oil_content"


@dataclass(frozen=True)
class SensorReading:
    unit_id: int
    kind: SensorKind
    value: float  # Pa, °C, Pa amplitude, mg/L or fraction depending on kind
    timestamp: float
    noise_sigma: float = 0.0
    frequency: Optional[float] = None  # hydrophone only [Hz]

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")


@dataclass(frozen=True)
class SensorConfig:
    pressure_sigma: float = 0.0  # Pa
    hydrophone_sigma: float = 0.0  # Pa
    temperature_c: float = 15.0
    temperature_sigma: float = 0.0
    do_baseline: float = 8.0  # mg/L
    k_do: float = 4.0  # mg/L drop at full oil content
    do_sigma: float = 0.0
    oil_content_sigma: float = 0.0

    def __post_init__(self):
        for name in ("pressure_sigma", "hydrophone_sigma", "temperature_sigma", "do_sigma",
                     "oil_content_sigma", "k_do", "do_baseline"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class ControlConfig:
    enabled: bool = False
    gain: float = 0.5
    target_margin: float = 1.25
    every_n_steps: int = 10
    design_droplet_radius: float = 1e-3  # m
    min_power_scale: float = 0.0
    sensors: SensorConfig = field(default_factory=SensorConfig)

    def __post_init__(self):
        if not self.gain > 0:
            raise ValueError("controller gain must be positive")
        if not self.target_margin >= 1:
            raise ValueError("target margin must be at least 1")
        if self.every_n_steps < 1:
            raise ValueError("control cadence must be at least one step")
        if not self.design_droplet_radius > 0:
            raise ValueError("design droplet radius must be positive")
        if self.min_power_scale < 0:
            raise ValueError("min_power_scale must be non-negative")


@dataclass(frozen=True)
class ControllerState:
    unit_id: int
    target_margin: float = 1.25
    gain: float = 0.5
    min_power_scale: float = 0.0
    max_power_scale: float = 32.0

    def __post_init__(self):
        if not self.target_margin >= 1:
            raise ValueError("target margin must be at least 1")
        if not self.gain > 0:
            raise ValueError("controller gain must be positive")
        if not 0 <= self.min_power_scale <= self.max_power_scale:
            raise ValueError("power_scale bounds must satisfy 0 <= min <= max")

    @classmethod
    def for_unit(cls, unit: LevitatorUnit, config: ControlConfig) -> "ControllerState":
        return cls(
            unit_id=unit.id,
            target_margin=config.target_margin,
            gain=config.gain,
            min_power_scale=min(config.min_power_scale, unit.max_power_scale),
            max_power_scale=unit.max_power_scale,
        )


def first_node_point(unit: LevitatorUnit, env: Environment) -> tuple[float, float, float]:
    """On-axis point of the node closest to the reflector."""
    z = float(node_depths(unit, env)[0])
    return unit.position[0], unit.position[1], z


def oil_content(spill: Optional[SpillState], unit: LevitatorUnit) -> float:
    """Fraction of all droplets that are free and within one beam radius of the unit axis."""
    if spill is None or len(spill) == 0:
        return 0.0
    free = spill.free_mask()
    d = np.hypot(spill.positions[:, 0] - unit.position[0], spill.positions[:, 1] - unit.position[1])
    return float(np.count_nonzero(free & (d <= unit.radial_scale))) / len(spill)


def sample_sensors(
    spill: Optional[SpillState],
    field: ArpField,
    unit: LevitatorUnit,
    env: Environment,
    rng: np.random.Generator,
    sensors: SensorConfig = SensorConfig(),
    timestamp: Optional[float] = None,
) -> list[SensorReading]:
    """
    One reading of every sensor kind for ``unit``.

    Five standard-normal draws are consumed per call regardless of the
    configured sigmas, so the stream position depends only on the call count.
    """
    t = spill.time if timestamp is None and spill is not None else (timestamp or 0.0)
    z = rng.standard_normal(5)
    s = sensors

    pressure = arp_at(field, first_node_point(unit, env)) + s.pressure_sigma * z[0]
    amplitude = unit_peak_arp(unit, env) + s.hydrophone_sigma * z[1]
    temperature = s.temperature_c + s.temperature_sigma * z[2]
    true_oil = oil_content(spill, unit)
    oil = min(1.0, max(0.0, true_oil + s.oil_content_sigma * z[3]))
    do = max(0.0, s.do_baseline - s.k_do * true_oil + s.do_sigma * z[4])

    return [
        SensorReading(unit.id, SensorKind.PRESSURE, pressure, t, s.pressure_sigma),
        SensorReading(unit.id, SensorKind.HYDROPHONE, amplitude, t, s.hydrophone_sigma,
                      frequency=unit.frequency),
        SensorReading(unit.id, SensorKind.TEMPERATURE, temperature, t, s.temperature_sigma),
        SensorReading(unit.id, SensorKind.OIL_CONTENT, oil, t, s.oil_content_sigma),
        SensorReading(unit.id, SensorKind.DISSOLVED_OXYGEN, do, t, s.do_sigma),
    ]


def control_step(
    ctrl: ControllerState, reading: SensorReading, required: float, unit: LevitatorUnit
) -> LevitatorUnit:
    """Proportional update of ``power_scale`` on the relative pressure error."""
    if reading.kind is not SensorKind.PRESSURE:
        raise ValueError(f"controller needs a pressure reading, got {reading.kind.value}")
    target = ctrl.target_margin * required
    measured = reading.value
    factor = 1.0 + ctrl.gain * (target - measured) / max(measured, PRESSURE_FLOOR)
    new_scale = min(max(unit.power_scale * factor, ctrl.min_power_scale), ctrl.max_power_scale)
    return replace(unit, power_scale=new_scale)
