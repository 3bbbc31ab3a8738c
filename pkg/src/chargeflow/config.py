"""JSON run configuration: schema validation and instance construction."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .core import ProblemInstance
from .demand import ElasticDemand, InelasticDemand, UniformPatience
from .spatial import Region, build_grid_instance, travel_times

_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["stations", "params", "demand"],
    "properties": {
        "description": {"type": "string"},
        "stations": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["x", "y", "capacity"],
                "properties": {"x": {"type": "number"}, "y": {"type": "number"}, "capacity": _pos},
            },
        },
        "region": {
            "type": "object",
            "additionalProperties": False,
            "required": ["side", "grid", "crossing_time_min"],
            "properties": {
                "side": _pos,
                "grid": {"type": "integer", "minimum": 1},
                "crossing_time_min": _pos,
            },
        },
        "sites": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["x", "y", "rate"],
                "properties": {"x": {"type": "number"}, "y": {"type": "number"}, "rate": _nonneg},
            },
        },
        "travel_times_min": {
            "type": "array",
            "items": {"type": "array", "items": _nonneg},
        },
        "params": {
            "type": "object",
            "additionalProperties": False,
            "required": ["T_min", "epsilon_min"],
            "properties": {"T_min": _pos, "epsilon_min": _pos, "speed": _pos},
        },
        "demand": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type"],
                    "properties": {"type": {"const": "inelastic"}, "rate_total": _pos},
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "rbar_total"],
                    "properties": {
                        "type": {"const": "elastic_uniform"},
                        "rbar_total": _pos,
                        "patience_max_min": _pos,
                    },
                },
            ]
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "grad_tol": _pos,
                "max_iters": {"type": "integer", "minimum": 1},
                "method": {"enum": ["newton", "gradient"]},
            },
        },
        "ode": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "step_min": _pos,
                "horizon_min": _pos,
                "stride": {"type": "integer", "minimum": 1},
            },
        },
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "horizon_min": _pos,
                "warmup_min": _nonneg,
                "stride_min": _pos,
            },
        },
    },
    "oneOf": [{"required": ["region"]}, {"required": ["sites"]}],
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    raw: dict
    instance: ProblemInstance
    region: Region = None

    def block(self, name):
        return dict(self.raw.get(name, {}))


def load_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(raw)


def parse_config(raw: dict) -> RunConfig:
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema violation at {where}: {exc.message}") from exc
    try:
        return _build(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _build(raw):
    st = raw["stations"]
    station_xy = np.array([[s["x"], s["y"]] for s in st], dtype=float)
    caps = np.array([s["capacity"] for s in st], dtype=float)
    T = float(raw["params"]["T_min"])
    eps = float(raw["params"]["epsilon_min"])
    dem = raw["demand"]

    if "region" in raw:
        if "travel_times_min" in raw:
            raise ValueError("travel_times_min is only allowed together with explicit sites")
        reg = raw["region"]
        region = Region(reg["side"], int(reg["grid"]), reg["crossing_time_min"])
        m = region.grid**2
        if dem["type"] == "inelastic":
            if "rate_total" not in dem:
                raise ValueError("inelastic demand on a region needs demand.rate_total")
            demand = InelasticDemand(np.full(m, dem["rate_total"] / m))
        else:
            demand = _elastic(np.full(m, 1.0), dem, T)
        inst = build_grid_instance(region, station_xy, caps, None, T, eps, demand=demand)
        return RunConfig(raw, inst, region)

    sites = raw["sites"]
    site_xy = np.array([[s["x"], s["y"]] for s in sites], dtype=float)
    rates = np.array([s["rate"] for s in sites], dtype=float)
    if "travel_times_min" in raw:
        kappa = np.array(raw["travel_times_min"], dtype=float)
        if kappa.shape != (len(sites), len(st)):
            raise ValueError(
                f"travel_times_min must be {len(sites)} x {len(st)}, got {kappa.shape}"
            )
    else:
        kappa = travel_times(site_xy, station_xy, raw["params"].get("speed", 1.0))
    if dem["type"] == "inelastic":
        if "rate_total" in dem:
            rates = rates * (dem["rate_total"] / rates.sum())
        demand = InelasticDemand(rates)
    else:
        demand = _elastic(rates, dem, T)
    inst = ProblemInstance(caps, kappa, T, eps, demand, site_xy=site_xy, station_xy=station_xy)
    return RunConfig(raw, inst, None)


def _elastic(weights, dem, T):
    if weights.sum() <= 0:
        raise ValueError("site rates must not all be zero")
    rbar = weights * (dem["rbar_total"] / weights.sum())
    return ElasticDemand(rbar, UniformPatience(dem.get("patience_max_min", T)))
