"""Cable-driven actuator chain: motor torque -> spool force -> sheath loss -> elbow torque.

A single flexor cable runs from a geared spool through a guiding sheath and
spans the elbow between two straps. Sheath friction follows a capstan law
whose sign depends on the direction the motor is turning; the moment arm is
the derivative of the cable extension function ``h(theta)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

# Below this |J_f| (metres) the inverse transmission is treated as singular.
GAIN_EPSILON = 1e-6


class DegenerateGainError(ArithmeticError):
    """The cable moment arm vanished, so the motor cannot produce elbow torque."""

    def __init__(self, theta: float, moment_arm: float):
        self.theta = theta
        self.moment_arm = moment_arm
        super().__init__(
            f"degenerate transmission at theta={theta!r} rad: "
            f"|J_f|={abs(moment_arm):.3e} m < {GAIN_EPSILON:g} m"
        )


class MotorDirection(enum.Enum):
    NON_NEGATIVE = "non_negative"
    NEGATIVE = "negative"


class CableMode(enum.Enum):
    """``IDEAL`` lets the cable push (signed tension); ``PHYSICAL`` clamps tension at zero."""

    IDEAL = "ideal"
    PHYSICAL = "physical"


@dataclass(frozen=True)
class ActuatorParams:
    half_width_a: float = 0.05
    strap_offset_b: float = 0.1
    spool_radius_Rm: float = 0.03
    gear_ratio_N: float = 25.0
    friction_mu: float = 0.07
    sheath_curvature_phi: float = math.pi

    def __post_init__(self):
        for name in ("half_width_a", "strap_offset_b", "spool_radius_Rm"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be > 0, got {value!r}")
        if not (math.isfinite(self.gear_ratio_N) and self.gear_ratio_N >= 1):
            raise ValueError(f"gear_ratio_N must be >= 1, got {self.gear_ratio_N!r}")
        if not (math.isfinite(self.friction_mu) and self.friction_mu >= 0):
            raise ValueError(f"friction_mu must be >= 0, got {self.friction_mu!r}")
        if not (math.isfinite(self.sheath_curvature_phi) and self.sheath_curvature_phi >= 0):
            raise ValueError(
                f"sheath_curvature_phi must be >= 0, got {self.sheath_curvature_phi!r}"
            )

    @property
    def strap_radius(self) -> float:
        return math.hypot(self.half_width_a, self.strap_offset_b)

    @property
    def strap_angle(self) -> float:
        return math.atan2(self.half_width_a, self.strap_offset_b)


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


def extension_length(theta: float, p: ActuatorParams) -> float:
    """Signed change in cable length between the straps relative to ``theta = 0``.

    Negative values mean the cable has shortened (flexion).
    """
    _require_finite(theta=theta)
    if theta == 0.0:
        return 0.0
    return 2.0 * p.strap_radius * math.cos(p.strap_angle + 0.5 * theta) - 2.0 * p.strap_offset_b


def moment_arm(theta: float, p: ActuatorParams) -> float:
    """Raw signed ``dh/dtheta``; negative over the working range of the elbow."""
    _require_finite(theta=theta)
    return -p.strap_radius * math.sin(p.strap_angle + 0.5 * theta)


def motor_direction(theta_dot: float) -> MotorDirection:
    # Motor velocity is kinematically slaved to elbow velocity through h(theta).
    _require_finite(theta_dot=theta_dot)
    return MotorDirection.NON_NEGATIVE if theta_dot >= 0.0 else MotorDirection.NEGATIVE


def cable_force_at_spool(tau_m: float, p: ActuatorParams) -> float:
    _require_finite(tau_m=tau_m)
    return p.gear_ratio_N * tau_m / p.spool_radius_Rm


def sheath_factor(direction: MotorDirection, p: ActuatorParams) -> float:
    mu_phi = p.friction_mu * p.sheath_curvature_phi
    if direction is MotorDirection.NON_NEGATIVE:
        return math.exp(-mu_phi)
    return math.exp(mu_phi)


def sheath_transmission(F1: float, direction: MotorDirection, p: ActuatorParams) -> float:
    """Cable tension after the sheath, capstan friction opposing the sliding direction."""
    _require_finite(F1=F1)
    return F1 * sheath_factor(direction, p)


def raw_transmission_gain(theta: float, direction: MotorDirection, p: ActuatorParams) -> float:
    """Gain without the singularity guard; may be arbitrarily close to zero."""
    return p.gear_ratio_N * abs(moment_arm(theta, p)) / p.spool_radius_Rm * sheath_factor(direction, p)


def transmission_gain(theta: float, direction: MotorDirection, p: ActuatorParams) -> float:
    """Elbow torque per unit motor torque, ``N |J_f| / R_m * exp(-/+ mu phi)``.

    Raises:
        DegenerateGainError: if ``|J_f(theta)| < GAIN_EPSILON``.
    """
    j_f = moment_arm(theta, p)
    if abs(j_f) < GAIN_EPSILON:
        raise DegenerateGainError(theta, j_f)
    return p.gear_ratio_N * abs(j_f) / p.spool_radius_Rm * sheath_factor(direction, p)


def assist_torque(tau_m: float, theta: float, direction: MotorDirection, p: ActuatorParams) -> float:
    _require_finite(tau_m=tau_m)
    return transmission_gain(theta, direction, p) * tau_m


def motor_torque_for_assist(
    tau_a_desired: float, theta: float, direction: MotorDirection, p: ActuatorParams
) -> float:
    _require_finite(tau_a_desired=tau_a_desired)
    return tau_a_desired / transmission_gain(theta, direction, p)


def limit_motor_torque(tau_m: float, mode: CableMode) -> float:
    """A slack cable cannot push: in physical mode negative spool force is dropped."""
    if mode is CableMode.PHYSICAL and tau_m < 0.0:
        return 0.0
    return tau_m
