"""Human tracking model and the gravity-compensating exosuit controllers.

The human is modelled as a computed-torque tracker of a trajectory the
exosuit never sees. The GC controller cancels the gravity moment from known
parameters; the AGC controller uses an online estimate of the lumped gravity
parameter, learned from the prediction error

    xi = tau_h + G * tau_m - Z @ theta_hat

with the gradient law ``theta_hat_dot = Lambda^-1 Z^T xi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .actuator import ActuatorParams, MotorDirection, motor_torque_for_assist
from .arm import ArmParams, JointState, ParamVector, gravity_regressor_Y, true_sigma


@dataclass(frozen=True)
class HumanGains:
    kp: float = 25.0
    kd: float = 10.0

    def __post_init__(self):
        if not (math.isfinite(self.kp) and self.kp > 0):
            raise ValueError(f"kp must be > 0, got {self.kp!r}")
        if not (math.isfinite(self.kd) and self.kd > 0):
            raise ValueError(f"kd must be > 0, got {self.kd!r}")


@dataclass(frozen=True)
class ReferenceSample:
    theta_r: float
    theta_r_dot: float
    theta_r_ddot: float


@dataclass(frozen=True)
class AdaptationConfig:
    lambda_diag: tuple[float, float, float] = (0.05, 0.05, 0.05)
    theta_hat_init: ParamVector = field(default_factory=lambda: ParamVector(0.1, 0.1, 0.1))

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lambda_diag)
        if len(lam) != 3 or not all(math.isfinite(v) and v > 0 for v in lam):
            raise ValueError(f"lambda_diag must be 3 positive reals, got {self.lambda_diag!r}")
        object.__setattr__(self, "lambda_diag", lam)
        init = ParamVector.from_array(self.theta_hat_init)
        if not all(math.isfinite(v) for v in init):
            raise ValueError(f"theta_hat_init must be finite, got {self.theta_hat_init!r}")
        object.__setattr__(self, "theta_hat_init", init)

    @property
    def inverse_gain(self) -> np.ndarray:
        return 1.0 / np.asarray(self.lambda_diag)


def human_torque(s: JointState, ref: ReferenceSample, p: ArmParams, gains: HumanGains) -> float:
    """Torque the human applies to track ``ref``, assuming gravity is already cancelled."""
    e = s.theta - ref.theta_r
    e_dot = s.theta_dot - ref.theta_r_dot
    return (
        p.inertia_Ie * ref.theta_r_ddot
        + p.damping_be * s.theta_dot
        - p.inertia_Ie * (gains.kp * e + gains.kd * e_dot)
    )


def unassisted_human_torque(
    s: JointState, ref: ReferenceSample, p: ArmParams, gains: HumanGains
) -> float:
    """Without an exosuit the human also carries the whole gravity moment."""
    return human_torque(s, ref, p, gains) + true_sigma(p) * gravity_regressor_Y(s.theta, p.gravity_g)


def gc_motor_torque(
    theta: float, direction: MotorDirection, p: ArmParams, act: ActuatorParams
) -> float:
    gravity = true_sigma(p) * gravity_regressor_Y(theta, p.gravity_g)
    return motor_torque_for_assist(gravity, theta, direction, act)


def agc_motor_torque(
    theta: float,
    direction: MotorDirection,
    sigma_hat: float,
    act: ActuatorParams,
    g: float = 9.81,
) -> float:
    return motor_torque_for_assist(gravity_regressor_Y(theta, g) * sigma_hat, theta, direction, act)


def prediction_error(
    tau_h: float, tau_m: float, Z: np.ndarray, theta_hat: ParamVector, G: float
) -> float:
    # G must be the same branch value that was used to apply tau_m.
    predicted = Z[0] * theta_hat[0] + Z[1] * theta_hat[1] + Z[2] * theta_hat[2]
    return tau_h + G * tau_m - float(predicted)


def adaptation_derivative(Z: np.ndarray, xi: float, cfg: AdaptationConfig) -> np.ndarray:
    return cfg.inverse_gain * np.asarray(Z, dtype=float) * xi


def sampled_adaptation_update(
    theta_hat: ParamVector, Z: np.ndarray, xi: float, cfg: AdaptationConfig, dt: float
) -> ParamVector:
    """Advance the estimate over one sample period with the regressor held.

    With ``Z`` frozen the gradient law is a linear ODE whose only moving
    direction is ``Lambda^-1 Z^T``, so it has the closed-form solution

        theta_hat(dt) = theta_hat + Lambda^-1 Z^T xi * (1 - exp(-s dt)) / s,
        s = Z Lambda^-1 Z^T.

    Unlike an explicit integrator this never overshoots, so ``V`` cannot grow
    across a sample no matter how large ``|Z|`` becomes.
    """
    rate = adaptation_derivative(Z, xi, cfg)
    z = np.asarray(Z, dtype=float)
    s = float(z @ (cfg.inverse_gain * z))
    x = s * dt
    # -expm1(-x)/x -> 1 as x -> 0
    scale = dt if x < 1e-12 else -math.expm1(-x) / s
    return ParamVector.from_array(np.asarray(theta_hat) + rate * scale)


def lyapunov_value(theta_tilde: ParamVector, cfg: AdaptationConfig) -> float:
    lam = cfg.lambda_diag
    return 0.5 * sum(l * v * v for l, v in zip(lam, theta_tilde))


def extract_sigma_hat(theta_hat: ParamVector) -> float:
    return float(theta_hat[2])
