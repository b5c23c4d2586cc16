"""Scenario configuration files.

A config is a TOML document with sections ``[arm]``, ``[actuator]``,
``[human]``, ``[adaptation]`` and ``[simulation]``. Every key is optional;
anything missing takes the default of the corresponding dataclass, and each
fallback is logged at INFO level. Unknown sections or keys are rejected.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import re
from dataclasses import dataclass
from typing import Any, Callable

import tomli
import tomli_w

from .actuator import ActuatorParams, CableMode
from .arm import ArmParams, ParamVector
from .control import AdaptationConfig, HumanGains
from .sim import (
    AdaptationScheme,
    ControllerMode,
    ReferenceProfile,
    Scenario,
    SingularPolicy,
)

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Bad config document: syntax error, unknown key, wrong type or out-of-range value."""


@dataclass(frozen=True)
class _Key:
    section: str
    name: str
    kind: str  # "float", "vec3", "enum"
    bound: str = ""
    ok: Callable[[Any], bool] = lambda v: True
    enum: type | None = None


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


_KEYS = [
    _Key("arm", "m_e", "float", ">= 0", _nonneg),
    _Key("arm", "M", "float", ">= 0", _nonneg),
    _Key("arm", "l_e", "float", "> 0", _pos),
    _Key("arm", "b_e", "float", ">= 0", _nonneg),
    _Key("arm", "I_e", "float", "> 0", _pos),
    _Key("arm", "l_c", "float", "> 0", _pos),
    _Key("arm", "l_w", "float", "> 0", _pos),
    _Key("arm", "g", "float", "> 0", _pos),
    _Key("actuator", "a", "float", "> 0", _pos),
    _Key("actuator", "b", "float", "> 0", _pos),
    _Key("actuator", "R_m", "float", "> 0", _pos),
    _Key("actuator", "N", "float", ">= 1", lambda v: v >= 1),
    _Key("actuator", "mu", "float", ">= 0", _nonneg),
    _Key("actuator", "phi", "float", ">= 0", _nonneg),
    _Key("human", "k_p", "float", "> 0", _pos),
    _Key("human", "k_d", "float", "> 0", _pos),
    _Key("adaptation", "Lambda", "vec3", "> 0 (each diagonal entry)", lambda v: all(x > 0 for x in v)),
    _Key("adaptation", "Theta0", "vec3", "finite"),
    _Key("simulation", "amplitude", "float", "in (0, pi)", lambda v: 0 < v < math.pi),
    _Key("simulation", "omega", "float", "> 0", _pos),
    _Key("simulation", "duration", "float", "> 0", _pos),
    _Key("simulation", "dt", "float", "> 0", _pos),
    _Key("simulation", "theta_init", "float", "finite"),
    _Key("simulation", "theta_dot_init", "float", "finite"),
    _Key("simulation", "mode", "enum", enum=ControllerMode),
    _Key("simulation", "cable_mode", "enum", enum=CableMode),
    _Key("simulation", "reference", "enum", enum=ReferenceProfile),
    _Key("simulation", "adaptation_scheme", "enum", enum=AdaptationScheme),
    _Key("simulation", "singular_policy", "enum", enum=SingularPolicy),
]
SECTIONS = ("arm", "actuator", "human", "adaptation", "simulation")
_BY_SECTION = {s: {k.name: k for k in _KEYS if k.section == s} for s in SECTIONS}


def scenario_to_dict(sc: Scenario) -> dict[str, dict[str, Any]]:
    arm, act, ad = sc.arm, sc.actuator, sc.adaptation
    return {
        "arm": {
            "m_e": arm.forearm_mass_me,
            "M": arm.payload_M,
            "l_e": arm.forearm_length_le,
            "b_e": arm.damping_be,
            "I_e": arm.inertia_Ie,
            "l_c": arm.cg_distance_lc,
            "l_w": arm.wrist_offset_lw,
            "g": arm.gravity_g,
        },
        "actuator": {
            "a": act.half_width_a,
            "b": act.strap_offset_b,
            "R_m": act.spool_radius_Rm,
            "N": act.gear_ratio_N,
            "mu": act.friction_mu,
            "phi": act.sheath_curvature_phi,
        },
        "human": {"k_p": sc.gains.kp, "k_d": sc.gains.kd},
        "adaptation": {
            "Lambda": [float(v) for v in ad.lambda_diag],
            "Theta0": [float(v) for v in ad.theta_hat_init],
        },
        "simulation": {
            "amplitude": sc.ref_amplitude,
            "omega": sc.ref_frequency,
            "duration": sc.duration,
            "dt": sc.dt,
            "theta_init": sc.theta_init,
            "theta_dot_init": sc.theta_dot_init,
            "mode": sc.controller_mode.value,
            "cable_mode": sc.cable_mode.value,
            "reference": sc.reference_profile.value,
            "adaptation_scheme": sc.adaptation_scheme.value,
            "singular_policy": sc.singular_policy.value,
        },
    }


def _locate(text: str, section: str, key: str | None = None) -> str:
    """Best-effort ``line N`` for a section header or a key inside it."""
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        header = re.match(r"\s*\[\s*([^\]]+?)\s*\]", line)
        if header:
            current = header.group(1)
            if key is None and current == section:
                return f"line {lineno}"
            continue
        if key is not None and current == section and re.match(rf"\s*\"?{re.escape(key)}\"?\s*=", line):
            return f"line {lineno}"
    return f"section [{section}]"


def _coerce(spec: _Key, value: Any, where: str):
    label = f"[{spec.section}] {spec.name} ({where})"
    if spec.kind == "enum":
        choices = [m.value for m in spec.enum]
        if not isinstance(value, str) or value.lower() not in choices:
            raise ConfigError(f"{label}: must be one of {choices}, got {value!r}")
        return spec.enum(value.lower())
    if spec.kind == "vec3":
        if _is_number(value) and spec.name == "Lambda":
            value = [value] * 3
        if not (isinstance(value, list) and len(value) == 3 and all(map(_is_number, value))):
            raise ConfigError(f"{label}: expected a list of 3 numbers, got {value!r}")
        out = [float(v) for v in value]
        if not all(math.isfinite(v) for v in out) or not spec.ok(out):
            raise ConfigError(f"{label}: {spec.name} must be {spec.bound}, got {value!r}")
        return out
    if not _is_number(value):
        raise ConfigError(f"{label}: expected a number, got {value!r}")
    out = float(value)
    if not (math.isfinite(out) and spec.ok(out)):
        raise ConfigError(f"{label}: {spec.name} must be {spec.bound}, got {value!r}")
    return out


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def parse_config(text: str) -> Scenario:
    """Parse and fully validate a config document into a :class:`Scenario`."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}") from exc

    for name, body in doc.items():
        if name not in _BY_SECTION:
            raise ConfigError(f"unknown section [{name}] ({_locate(text, name)})")
        if not isinstance(body, dict):
            raise ConfigError(f"'{name}' must be a section, not a value")
        for key in body:
            if key not in _BY_SECTION[name]:
                raise ConfigError(
                    f"unknown key '{key}' in [{name}] ({_locate(text, name, key)}); "
                    f"allowed: {sorted(_BY_SECTION[name])}"
                )

    defaults = scenario_to_dict(Scenario())
    v: dict[str, dict[str, Any]] = {}
    for section in SECTIONS:
        given = doc.get(section, {})
        v[section] = {}
        for key, spec in _BY_SECTION[section].items():
            if key in given:
                v[section][key] = _coerce(spec, given[key], _locate(text, section, key))
            else:
                logger.info("[%s] %s not set, using default %r", section, key, defaults[section][key])
                v[section][key] = _coerce(spec, defaults[section][key], "default")

    a, act, hum, ad, sim = (v[s] for s in SECTIONS)
    if sim["duration"] < sim["dt"]:
        raise ConfigError(
            f"[simulation] duration ({_locate(text, 'simulation', 'duration')}): "
            f"duration must be >= dt={sim['dt']!r}, got {sim['duration']!r}"
        )
    try:
        return Scenario(
            arm=ArmParams(
                forearm_mass_me=a["m_e"],
                payload_M=a["M"],
                forearm_length_le=a["l_e"],
                damping_be=a["b_e"],
                inertia_Ie=a["I_e"],
                cg_distance_lc=a["l_c"],
                wrist_offset_lw=a["l_w"],
                gravity_g=a["g"],
            ),
            actuator=ActuatorParams(
                half_width_a=act["a"],
                strap_offset_b=act["b"],
                spool_radius_Rm=act["R_m"],
                gear_ratio_N=act["N"],
                friction_mu=act["mu"],
                sheath_curvature_phi=act["phi"],
            ),
            gains=HumanGains(kp=hum["k_p"], kd=hum["k_d"]),
            adaptation=AdaptationConfig(
                lambda_diag=tuple(ad["Lambda"]),
                theta_hat_init=ParamVector.from_array(ad["Theta0"]),
            ),
            controller_mode=sim["mode"],
            ref_amplitude=sim["amplitude"],
            ref_frequency=sim["omega"],
            duration=sim["duration"],
            dt=sim["dt"],
            cable_mode=sim["cable_mode"],
            theta_init=sim["theta_init"],
            theta_dot_init=sim["theta_dot_init"],
            reference_profile=sim["reference"],
            adaptation_scheme=sim["adaptation_scheme"],
            singular_policy=sim["singular_policy"],
        )
    except ValueError as exc:  # pragma: no cover - every bound is checked above
        raise ConfigError(str(exc)) from exc


def load_config(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def render_config(sc: Scenario) -> str:
    """TOML text that parses back to an identical scenario."""
    return tomli_w.dumps(scenario_to_dict(sc))


def config_hash(sc: Scenario) -> str:
    """SHA-256 of the resolved scenario; independent of key order in the source file."""
    canonical = json.dumps(scenario_to_dict(sc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
