"""Scenario files: ``key = value`` lines, optionally grouped by section.

Sections and keys (any key may also appear before the first header)::

    [geometry]  arm_length, lane_width
    [vehicle]   length, width, max_speed, max_accel, max_decel
    [traffic]   T1, T2, T3, T4, spawn_window
    [policy]    policy, margin, green, yellow, red, phase_origin
    [run]       seed, drain_cap, dt

Omitted keys take their defaults. ``T<n> = inf`` disables a direction.
Lines starting with ``#`` or ``;`` are comments.
"""

from __future__ import annotations

import configparser
from dataclasses import replace

from .dynamics import VehicleParams
from .engine import ScenarioConfig
from .geometry import Axis, IntersectionGeometry
from .policy import LightSchedule

SECTIONS = {
    "geometry": ("arm_length", "lane_width"),
    "vehicle": ("length", "width", "max_speed", "max_accel", "max_decel"),
    "traffic": ("T1", "T2", "T3", "T4", "spawn_window"),
    "policy": ("policy", "margin", "green", "yellow", "red", "phase_origin"),
    "run": ("seed", "drain_cap", "dt"),
}
_ROOT = "__root__"
_HOME = {key: sec for sec, keys in SECTIONS.items() for key in keys}


class ConfigError(ValueError):
    pass


def _float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _int(key: str, raw: str) -> int:
    try:
        return int(raw, 0)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def parse_scenario(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
        default_section="__none__",
    )
    cp.optionxform = str
    try:
        cp.read_string(f"[{_ROOT}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario file: {exc}") from None

    values: dict[str, str] = {}
    for section in cp.sections():
        if section != _ROOT and section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in _HOME:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            if section != _ROOT and _HOME[key] != section:
                raise ConfigError(f"{key} belongs in [{_HOME[key]}], not [{section}]")
            if key in values:
                raise ConfigError(f"{key} given more than once")
            values[key] = raw.strip()

    def num(key, default):
        return _float(key, values[key]) if key in values else default

    defaults = {f: getattr(ScenarioConfig(), f) for f in ("geometry", "vehicle", "T", "light")}
    try:
        geometry = IntersectionGeometry(
            num("arm_length", defaults["geometry"].arm_length),
            num("lane_width", defaults["geometry"].lane_width),
        )
        vp = defaults["vehicle"]
        vehicle = VehicleParams(*(num(k, getattr(vp, k)) for k in SECTIONS["vehicle"]))
        origin = values.get("phase_origin", "NS").upper()
        if origin not in Axis.__members__:
            raise ConfigError(f"phase_origin: expected NS or EW, got {origin!r}")
        lt = defaults["light"]
        light = LightSchedule(num("green", lt.green), num("yellow", lt.yellow),
                              num("red", lt.red), Axis[origin])
        policy = values.get("policy", "light").lower()
        kwargs = dict(
            geometry=geometry, vehicle=vehicle, light=light, policy=policy,
            T=tuple(num(f"T{d}", defaults["T"][d - 1]) for d in range(1, 5)),
            seed=_int("seed", values["seed"]) if "seed" in values else 0,
        )
        for key in ("margin", "spawn_window", "drain_cap", "dt"):
            if key in values:
                kwargs[key] = _float(key, values[key])
        return ScenarioConfig(**kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_scenario(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def format_scenario(cfg: ScenarioConfig) -> str:
    """Fully resolved scenario text; ``parse_scenario`` inverts it exactly."""
    flat = {
        "arm_length": cfg.geometry.arm_length, "lane_width": cfg.geometry.lane_width,
        **{k: getattr(cfg.vehicle, k) for k in SECTIONS["vehicle"]},
        **{f"T{d}": cfg.T[d - 1] for d in range(1, 5)},
        "spawn_window": cfg.spawn_window,
        "policy": cfg.policy, "margin": cfg.margin,
        "green": cfg.light.green, "yellow": cfg.light.yellow, "red": cfg.light.red,
        "phase_origin": cfg.light.phase_origin.name,
        "seed": cfg.seed, "drain_cap": cfg.drain_cap, "dt": cfg.dt,
    }
    lines = []
    for section, keys in SECTIONS.items():
        lines.append(f"[{section}]")
        for key in keys:
            value = flat[key]
            lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)


def with_overrides(cfg: ScenarioConfig, **changes) -> ScenarioConfig:
    changes = {k: v for k, v in changes.items() if v is not None}
    return replace(cfg, **changes) if changes else cfg
