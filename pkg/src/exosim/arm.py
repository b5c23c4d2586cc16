"""Single-joint forearm model in the sagittal plane.

``theta = 0`` is the forearm hanging straight down, positive ``theta`` is
flexion. The plant is

    I_e * theta_ddot + b_e * theta_dot + sigma * g * sin(theta) = tau_h + tau_a

with the lumped gravity parameter ``sigma = m_e * l_c + M * (l_e + l_w)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class ArmParams:
    forearm_mass_me: float = 1.5343
    payload_M: float = 0.0
    forearm_length_le: float = 0.28
    damping_be: float = 0.0
    inertia_Ie: float = 0.0201
    cg_distance_lc: float = 0.1815
    wrist_offset_lw: float = 0.04
    gravity_g: float = 9.81

    def __post_init__(self):
        checks = {
            "inertia_Ie": self.inertia_Ie > 0,
            "forearm_mass_me": self.forearm_mass_me >= 0,
            "payload_M": self.payload_M >= 0,
            "forearm_length_le": self.forearm_length_le > 0,
            "cg_distance_lc": self.cg_distance_lc > 0,
            "wrist_offset_lw": self.wrist_offset_lw > 0,
            "damping_be": self.damping_be >= 0,
            "gravity_g": self.gravity_g > 0,
        }
        for name, ok in checks.items():
            value = getattr(self, name)
            if not (math.isfinite(value) and ok):
                raise ValueError(f"invalid {name}={value!r}")


@dataclass(frozen=True)
class JointState:
    theta: float
    theta_dot: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.theta_dot)):
            raise ValueError(f"non-finite joint state {self!r}")


class ParamVector(NamedTuple):
    """``[I_e, b_e, sigma]``, ordered to match the regressor ``[theta_ddot, theta_dot, Y]``."""

    inertia: float
    damping: float
    sigma: float

    @classmethod
    def from_array(cls, values) -> "ParamVector":
        a, b, c = (float(v) for v in values)
        return cls(a, b, c)

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)

    def minus(self, other: "ParamVector") -> "ParamVector":
        return ParamVector(
            self.inertia - other.inertia, self.damping - other.damping, self.sigma - other.sigma
        )

    def norm(self) -> float:
        return math.sqrt(self.inertia**2 + self.damping**2 + self.sigma**2)


def gravity_regressor_Y(theta: float, g: float = 9.81) -> float:
    return g * math.sin(theta)


def true_sigma(p: ArmParams) -> float:
    return p.forearm_mass_me * p.cg_distance_lc + p.payload_M * (
        p.forearm_length_le + p.wrist_offset_lw
    )


def true_params(p: ArmParams) -> ParamVector:
    return ParamVector(p.inertia_Ie, p.damping_be, true_sigma(p))


def forward_accel(s: JointState, p: ArmParams, tau_h: float, tau_a: float) -> float:
    """Elbow acceleration produced by the combined human and actuator torque."""
    if not p.inertia_Ie > 0:
        raise ValueError(f"inertia_Ie must be > 0, got {p.inertia_Ie!r}")
    gravity = true_sigma(p) * gravity_regressor_Y(s.theta, p.gravity_g)
    return (tau_h + tau_a - p.damping_be * s.theta_dot - gravity) / p.inertia_Ie


def regressor(theta_ddot: float, s: JointState, g: float = 9.81) -> np.ndarray:
    """Row ``Z`` with ``Z @ [I_e, b_e, sigma]`` equal to the net joint torque."""
    return np.array([theta_ddot, s.theta_dot, gravity_regressor_Y(s.theta, g)])


def inverse_dynamics(theta: float, theta_dot: float, theta_ddot: float, p: ArmParams) -> float:
    return (
        p.inertia_Ie * theta_ddot
        + p.damping_be * theta_dot
        + true_sigma(p) * p.gravity_g * math.sin(theta)
    )


def mechanical_energy(s: JointState, p: ArmParams) -> float:
    """Kinetic plus gravitational energy, zero potential at the horizontal."""
    return 0.5 * p.inertia_Ie * s.theta_dot**2 - true_sigma(p) * p.gravity_g * math.cos(s.theta)
