"""
Scenario model, JSON scenario files, validation and resolved-scenario emission.

A scenario file is a JSON object with the sections ``environment``, ``oil``,
``spill``, ``levitators``, ``sim``, ``control`` and ``planner``. Unknown keys
are rejected. Every violation is reported with its JSON pointer, not just
the first one. Loading fills in defaults. ``scenario_to_dict`` emits the
fully resolved form, and loading that form gives the same ``Scenario`` back.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Union

import jsonschema

from levichain.control import ControlConfig, SensorConfig
from levichain.field import (
    FREQUENCY_BAND,
    LevitatorUnit,
    NoTrappingNodeError,
    node_geometry,
    surface_aligned_depth,
)
from levichain.physics import AIR_SOUND_SPEED, GRAVITY, SEAWATER_SOUND_SPEED, Environment, OilType
from levichain.planner import PlannerConfig
from levichain.spill import DEFAULT_DIFFUSIVITY, DEFAULT_K_WIND, RadiusSpec

PRESSURE_PRESETS = {"none": 0.0, "low": 6.0, "medium": 12.0, "high": 24.0}

MEDIA = {
    "seawater": {"sound_speed_mps": SEAWATER_SOUND_SPEED, "water_density_kgm3": 1025.0},
    "freshwater": {"sound_speed_mps": 1481.0, "water_density_kgm3": 1000.0},
    # desk bench: sound travels in air above a water tray
    "bench": {"sound_speed_mps": AIR_SOUND_SPEED, "water_density_kgm3": 1000.0},
}

DEFAULT_DOMAIN = [-1000.0, -1000.0, 1000.0, 1000.0]


class ScenarioError(Exception):
    """Base class for scenario loading problems."""


class ScenarioParseError(ScenarioError):
    def __init__(self, path: str, err: json.JSONDecodeError):
        super().__init__(f"{path}:{err.lineno}:{err.colno}: {err.msg}")
        self.lineno = err.lineno
        self.colno = err.colno


class ScenarioValidationError(ScenarioError):
    def __init__(self, violations: list[tuple[str, str]]):
        self.violations = sorted(set(violations))
        lines = [f"  {ptr or '/'}: {msg}" for ptr, msg in self.violations]
        super().__init__("invalid scenario:\n" + "\n".join(lines))

    @property
    def pointers(self) -> list[str]:
        return [p for p, _ in self.violations]


@dataclass(frozen=True)
class SpillConfig:
    origin: tuple[float, float] = (0.0, 0.0)
    count: int = 1000
    radius: RadiusSpec = field(default_factory=lambda: RadiusSpec(fixed=1e-3))
    k_wind: float = DEFAULT_K_WIND
    diffusivity: float = DEFAULT_DIFFUSIVITY

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("spill count must be at least 1")


@dataclass(frozen=True)
class Scenario:
    env: Environment
    oil: OilType
    spill: SpillConfig
    units: tuple[LevitatorUnit, ...] = ()
    wind_dir: float = 0.0
    dt: float = 10.0
    duration: float = 600.0
    domain_bounds: tuple[float, float, float, float] = tuple(DEFAULT_DOMAIN)
    pressure_level: Optional[str] = None
    capture_distance: Optional[float] = None
    control: ControlConfig = field(default_factory=ControlConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    medium: str = "custom"

    def effective_units(self) -> tuple[LevitatorUnit, ...]:
        """Units with the pressure-level preset applied to ``power_scale``."""
        if self.pressure_level is None:
            return self.units
        scale = PRESSURE_PRESETS[self.pressure_level]
        return tuple(replace(u, power_scale=scale) for u in self.units)

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.duration / self.dt + 1e-9))


def scenario_violations(s: Scenario) -> list[tuple[str, str]]:
    """Cross-field checks on an already constructed scenario."""
    out = []
    if not s.dt > 0:
        out.append(("/sim/dt_s", "must be > 0"))
    elif not (s.duration == 0 or s.duration >= s.dt):
        out.append(("/sim/duration_s", "must be 0 or at least dt_s"))
    xmin, ymin, xmax, ymax = s.domain_bounds
    if not (xmax > xmin and ymax > ymin):
        out.append(("/sim/domain_bounds_m", "bounds are degenerate; need xmin < xmax and ymin < ymax"))
    ox, oy = s.spill.origin
    if not (xmin <= ox <= xmax and ymin <= oy <= ymax):
        out.append(("/spill/origin_m", "origin lies outside domain_bounds_m"))
    if s.oil.density >= s.env.water_density:
        out.append(("/oil/density_kgm3", "oil must be lighter than water for a surface spill"))
    if s.pressure_level is not None and s.pressure_level not in PRESSURE_PRESETS:
        out.append(("/sim/pressure_level", f"unknown level {s.pressure_level!r}"))
    if s.capture_distance is not None and not s.capture_distance > 0:
        out.append(("/sim/capture_distance_m", "must be > 0"))
    seen = set()
    for i, u in enumerate(s.units):
        if u.id in seen:
            out.append((f"/levitators/{i}/id", f"duplicate unit id {u.id}"))
        seen.add(u.id)
        try:
            node_geometry(u, s.env)
        except NoTrappingNodeError as e:
            out.append((f"/levitators/{i}/reflector_gap_m", str(e)))
        if s.pressure_level in PRESSURE_PRESETS and PRESSURE_PRESETS[s.pressure_level] > u.max_power_scale:
            out.append((f"/levitators/{i}/max_power_scale",
                        f"below the {s.pressure_level!r} preset {PRESSURE_PRESETS[s.pressure_level]:g}"))
    try:
        node_geometry(s.planner.template, s.env)
    except NoTrappingNodeError as e:
        out.append(("/planner/template/reflector_gap_m", str(e)))
    return out


def validate_scenario(s: Scenario) -> None:
    violations = scenario_violations(s)
    if violations:
        raise ScenarioValidationError(violations)


# ---- JSON schema -------------------------------------------------------------

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_xy = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}


def _obj(props: dict, required: tuple = ()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_UNIT_FIELDS = {
    "heading_rad": _num,
    "num_transducers": {"type": "integer", "minimum": 1},
    "power_per_transducer_w": _pos,
    "frequency_hz": {"type": "number", "minimum": FREQUENCY_BAND[0], "maximum": FREQUENCY_BAND[1]},
    "aperture_m2": _pos,
    "reflector_gap_m": _pos,
    "depth_setpoint_m": _num,
    "power_scale": _nonneg,
    "max_power_scale": _nonneg,
}

SCHEMA = _obj(
    {
        "environment": _obj({
            "medium": {"enum": sorted(MEDIA) + ["custom"]},
            "wind_speed_mps": _nonneg,
            "water_density_kgm3": _pos,
            "sound_speed_mps": _pos,
            "gravity_mps2": _pos,
            "spreading_constant": _pos,
        }),
        "oil": _obj({
            "name": {"type": "string"},
            "density_kgm3": _pos,
            "viscosity_pas": _pos,
        }, required=("density_kgm3", "viscosity_pas")),
        "spill": _obj({
            "origin_m": _xy,
            "count": {"type": "integer", "minimum": 1},
            "radius": _obj({"fixed_m": _pos, "median_m": _pos, "sigma": _pos}),
            "k_wind": _nonneg,
            "diffusivity_m2ps": _nonneg,
        }, required=("count",)),
        "levitators": {
            "type": "array",
            "items": _obj({"id": {"type": "integer"}, "position_m": _xy, **_UNIT_FIELDS},
                          required=("position_m",)),
        },
        "sim": _obj({
            "dt_s": _pos,
            "duration_s": _nonneg,
            "wind_dir_rad": _num,
            "domain_bounds_m": {"type": "array", "items": _num, "minItems": 4, "maxItems": 4},
            "pressure_level": {"enum": [None] + sorted(PRESSURE_PRESETS)},
            "capture_distance_m": {"oneOf": [{"type": "null"}, _pos]},
        }, required=("dt_s", "duration_s")),
        "control": _obj({
            "enabled": {"type": "boolean"},
            "gain": _pos,
            "target_margin": {"type": "number", "minimum": 1},
            "every_n_steps": {"type": "integer", "minimum": 1},
            "design_droplet_radius_m": _pos,
            "min_power_scale": _nonneg,
            "sensors": _obj({
                "pressure_sigma_pa": _nonneg,
                "hydrophone_sigma_pa": _nonneg,
                "temperature_c": _num,
                "temperature_sigma_c": _nonneg,
                "do_baseline_mgl": _nonneg,
                "k_do_mgl": _nonneg,
                "do_sigma_mgl": _nonneg,
                "oil_content_sigma": _nonneg,
            }),
        }),
        "planner": _obj({
            "arc_degrees": {"type": "number", "exclusiveMinimum": 0, "maximum": 360},
            "inflation": _pos,
            "overlap": {"type": "number", "minimum": 0, "maximum": 0.9},
            "design_droplet_radius_m": _pos,
            "forecast_horizon_s": _nonneg,
            "chord_error_m": _pos,
            "template": _obj(_UNIT_FIELDS),
        }),
    },
    required=("environment", "oil", "spill", "sim"),
)


def _pointer(parts) -> str:
    return "".join(f"/{p}" for p in parts)


def _schema_violations(doc: Any) -> list[tuple[str, str]]:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    out = []
    for err in validator.iter_errors(doc):
        base = list(err.absolute_path)
        if err.validator == "required":
            missing = [k for k in err.validator_value if k not in err.instance]
            out.extend((_pointer(base + [k]), "required key is missing") for k in missing)
        elif err.validator == "additionalProperties":
            allowed = set(err.schema.get("properties", {}))
            extra = [k for k in err.instance if k not in allowed]
            out.extend((_pointer(base + [k]), "unknown key") for k in extra)
        else:
            out.append((_pointer(base), err.message))
    return out


# ---- defaults & construction -------------------------------------------------

def _unit_from(d: dict, env: Environment, uid: int, position) -> LevitatorUnit:
    unit = LevitatorUnit(
        id=uid,
        position=tuple(position),
        heading=float(d.get("heading_rad", 0.0)),
        num_transducers=int(d.get("num_transducers", 14)),
        power_per_transducer=float(d.get("power_per_transducer_w", 1.0)),
        frequency=float(d.get("frequency_hz", 40e3)),
        aperture_area=float(d.get("aperture_m2", 0.1)),
        reflector_gap=float(d.get("reflector_gap_m", 0.05)),
        depth_setpoint=float(d.get("depth_setpoint_m", 0.0)),
        power_scale=float(d.get("power_scale", 1.0)),
        max_power_scale=float(d.get("max_power_scale", 32.0)),
    )
    if "depth_setpoint_m" not in d:
        unit = replace(unit, depth_setpoint=surface_aligned_depth(unit, env))
    return unit


def _build(doc: dict) -> Scenario:
    env_d = doc["environment"]
    medium = env_d.get("medium", "seawater")
    media = MEDIA.get(medium, {})
    env = Environment(
        wind_speed=float(env_d.get("wind_speed_mps", 0.0)),
        water_density=float(env_d.get("water_density_kgm3", media.get("water_density_kgm3", 1025.0))),
        sound_speed=float(env_d.get("sound_speed_mps", media.get("sound_speed_mps", SEAWATER_SOUND_SPEED))),
        gravity=float(env_d.get("gravity_mps2", GRAVITY)),
        spreading_constant=float(env_d.get("spreading_constant", 1.0)),
    )
    oil_d = doc["oil"]
    oil = OilType(
        name=oil_d.get("name", "oil"),
        density=float(oil_d["density_kgm3"]),
        viscosity=float(oil_d["viscosity_pas"]),
    )
    sp = doc["spill"]
    rad = sp.get("radius", {"fixed_m": 1e-3})
    if "fixed_m" in rad:
        radius = RadiusSpec(fixed=float(rad["fixed_m"]))
    else:
        radius = RadiusSpec(median=float(rad["median_m"]), sigma=float(rad["sigma"]))
    spill = SpillConfig(
        origin=tuple(float(v) for v in sp.get("origin_m", (0.0, 0.0))),
        count=int(sp["count"]),
        radius=radius,
        k_wind=float(sp.get("k_wind", DEFAULT_K_WIND)),
        diffusivity=float(sp.get("diffusivity_m2ps", DEFAULT_DIFFUSIVITY)),
    )
    units = tuple(
        _unit_from(u, env, int(u.get("id", i)), [float(v) for v in u["position_m"]])
        for i, u in enumerate(doc.get("levitators", []))
    )
    sim = doc["sim"]
    c = doc.get("control", {})
    sd = c.get("sensors", {})
    sensors = SensorConfig(
        pressure_sigma=float(sd.get("pressure_sigma_pa", 0.0)),
        hydrophone_sigma=float(sd.get("hydrophone_sigma_pa", 0.0)),
        temperature_c=float(sd.get("temperature_c", 15.0)),
        temperature_sigma=float(sd.get("temperature_sigma_c", 0.0)),
        do_baseline=float(sd.get("do_baseline_mgl", 8.0)),
        k_do=float(sd.get("k_do_mgl", 4.0)),
        do_sigma=float(sd.get("do_sigma_mgl", 0.0)),
        oil_content_sigma=float(sd.get("oil_content_sigma", 0.0)),
    )
    control = ControlConfig(
        enabled=bool(c.get("enabled", False)),
        gain=float(c.get("gain", 0.5)),
        target_margin=float(c.get("target_margin", 1.25)),
        every_n_steps=int(c.get("every_n_steps", 10)),
        design_droplet_radius=float(c.get("design_droplet_radius_m", 1e-3)),
        min_power_scale=float(c.get("min_power_scale", 0.0)),
        sensors=sensors,
    )
    p = doc.get("planner", {})
    planner = PlannerConfig(
        arc_degrees=float(p.get("arc_degrees", 360.0)),
        inflation=float(p.get("inflation", 1.2)),
        overlap=float(p.get("overlap", 0.0)),
        design_droplet_radius=float(p.get("design_droplet_radius_m", 1e-3)),
        forecast_horizon=float(p.get("forecast_horizon_s", 600.0)),
        chord_error=float(p.get("chord_error_m", 1.0)),
        template=_unit_from(p.get("template", {}), env, 0, (0.0, 0.0)),
    )
    cap = sim.get("capture_distance_m")
    return Scenario(
        env=env,
        oil=oil,
        spill=spill,
        units=units,
        wind_dir=float(sim.get("wind_dir_rad", 0.0)),
        dt=float(sim["dt_s"]),
        duration=float(sim["duration_s"]),
        domain_bounds=tuple(float(v) for v in sim.get("domain_bounds_m", DEFAULT_DOMAIN)),
        pressure_level=sim.get("pressure_level"),
        capture_distance=None if cap is None else float(cap),
        control=control,
        planner=planner,
        medium=medium,
    )


def _semantic_violations(doc: dict) -> list[tuple[str, str]]:
    """Checks the schema cannot express; run only on schema-valid documents."""
    out = []
    rad = doc["spill"].get("radius")
    if rad is not None:
        fixed = "fixed_m" in rad
        logn = "median_m" in rad or "sigma" in rad
        if fixed and logn:
            out.append(("/spill/radius", "give either fixed_m or median_m+sigma, not both"))
        elif not fixed and not ("median_m" in rad and "sigma" in rad):
            out.append(("/spill/radius", "lognormal radius needs both median_m and sigma"))
    for i, u in enumerate(doc.get("levitators", [])):
        if u.get("power_scale", 1.0) > u.get("max_power_scale", 32.0):
            out.append((f"/levitators/{i}/power_scale", "exceeds max_power_scale"))
    t = doc.get("planner", {}).get("template", {})
    if t.get("power_scale", 1.0) > t.get("max_power_scale", 32.0):
        out.append(("/planner/template/power_scale", "exceeds max_power_scale"))
    return out


def scenario_from_dict(doc: Any) -> Scenario:
    """Validate a parsed scenario document and build the ``Scenario``."""
    violations = _schema_violations(doc)
    if violations:
        raise ScenarioValidationError(violations)
    violations = _semantic_violations(doc)
    if violations:
        raise ScenarioValidationError(violations)
    try:
        scenario = _build(copy.deepcopy(doc))
    except ValueError as e:
        raise ScenarioValidationError([("", str(e))]) from e
    validate_scenario(scenario)
    return scenario


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(str(path), e) from e
    return scenario_from_dict(doc)


def bundled_scenario_path(name: str) -> Path:
    return Path(str(resources.files("levichain") / "data" / name))


def load_bundled(name: str = "poc_bench.json") -> Scenario:
    return load_scenario(bundled_scenario_path(name))


# ---- emission ----------------------------------------------------------------

def unit_to_dict(u: LevitatorUnit, template: bool = False) -> dict:
    d = {} if template else {"id": u.id, "position_m": [u.position[0], u.position[1]]}
    d.update({
        "heading_rad": u.heading,
        "num_transducers": u.num_transducers,
        "power_per_transducer_w": u.power_per_transducer,
        "frequency_hz": u.frequency,
        "aperture_m2": u.aperture_area,
        "reflector_gap_m": u.reflector_gap,
        "depth_setpoint_m": u.depth_setpoint,
        "power_scale": u.power_scale,
        "max_power_scale": u.max_power_scale,
    })
    return d


def scenario_to_dict(s: Scenario) -> dict:
    """Fully resolved document; loading it reproduces ``s``."""
    r = s.spill.radius
    radius = {"fixed_m": r.fixed} if r.fixed is not None else {"median_m": r.median, "sigma": r.sigma}
    sn = s.control.sensors
    return {
        "environment": {
            "medium": s.medium,
            "wind_speed_mps": s.env.wind_speed,
            "water_density_kgm3": s.env.water_density,
            "sound_speed_mps": s.env.sound_speed,
            "gravity_mps2": s.env.gravity,
            "spreading_constant": s.env.spreading_constant,
        },
        "oil": {"name": s.oil.name, "density_kgm3": s.oil.density, "viscosity_pas": s.oil.viscosity},
        "spill": {
            "origin_m": list(s.spill.origin),
            "count": s.spill.count,
            "radius": radius,
            "k_wind": s.spill.k_wind,
            "diffusivity_m2ps": s.spill.diffusivity,
        },
        "levitators": [unit_to_dict(u) for u in s.units],
        "sim": {
            "dt_s": s.dt,
            "duration_s": s.duration,
            "wind_dir_rad": s.wind_dir,
            "domain_bounds_m": list(s.domain_bounds),
            "pressure_level": s.pressure_level,
            "capture_distance_m": s.capture_distance,
        },
        "control": {
            "enabled": s.control.enabled,
            "gain": s.control.gain,
            "target_margin": s.control.target_margin,
            "every_n_steps": s.control.every_n_steps,
            "design_droplet_radius_m": s.control.design_droplet_radius,
            "min_power_scale": s.control.min_power_scale,
            "sensors": {
                "pressure_sigma_pa": sn.pressure_sigma,
                "hydrophone_sigma_pa": sn.hydrophone_sigma,
                "temperature_c": sn.temperature_c,
                "temperature_sigma_c": sn.temperature_sigma,
                "do_baseline_mgl": sn.do_baseline,
                "k_do_mgl": sn.k_do,
                "do_sigma_mgl": sn.do_sigma,
                "oil_content_sigma": sn.oil_content_sigma,
            },
        },
        "planner": {
            "arc_degrees": s.planner.arc_degrees,
            "inflation": s.planner.inflation,
            "overlap": s.planner.overlap,
            "design_droplet_radius_m": s.planner.design_droplet_radius,
            "forecast_horizon_s": s.planner.forecast_horizon,
            "chord_error_m": s.planner.chord_error,
            "template": unit_to_dict(s.planner.template, template=True),
        },
    }


def dumps_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2, sort_keys=True) + "\n"


def scenario_digest(s: Scenario) -> str:
    blob = json.dumps(scenario_to_dict(s), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
