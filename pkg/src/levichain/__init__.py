"""Simulation and planning engine for acoustic-levitation oil-spill containment."""

from levichain.physics import (
    Environment,
    OilType,
    acoustic_intensity,
    arp_from_intensity,
    buoyant_arf,
    oil_spill_rate_effective,
    oil_spill_rate_paper,
    required_trapping_pressure,
)
from levichain.field import ArpField, LevitatorUnit, NodeGeometry, node_geometry, unit_peak_arp

__all__ = [
    "ArpField",
    "Environment",
    "LevitatorUnit",
    "NodeGeometry",
    "OilType",
    "acoustic_intensity",
    "arp_from_intensity",
    "buoyant_arf",
    "node_geometry",
    "oil_spill_rate_effective",
    "oil_spill_rate_paper",
    "required_trapping_pressure",
    "unit_peak_arp",
]

__version__ = "0.1.0"
