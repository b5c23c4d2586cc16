"""Invariant checks run by ``exosim check``.

Each check returns the worst observed deviation next to its tolerance so a
failure says by how much, not just that it failed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .actuator import (
    GAIN_EPSILON,
    ActuatorParams,
    MotorDirection,
    assist_torque,
    extension_length,
    moment_arm,
    motor_torque_for_assist,
    transmission_gain,
)
from .arm import true_params
from .sim import ControllerMode, Scenario, TrajectoryLog, run


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    observed: float
    tolerance: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<44} observed={self.observed:.3e} tol={self.tolerance:.1e}"


def _le(name: str, observed: float, tol: float) -> CheckResult:
    return CheckResult(name, bool(observed <= tol), float(observed), tol)


def transmission_checks(p: ActuatorParams) -> list[CheckResult]:
    thetas = np.linspace(-math.pi / 2, math.pi, 301)
    eps = 1e-5
    fd = max(
        abs((extension_length(t + eps, p) - extension_length(t - eps, p)) / (2 * eps) - moment_arm(t, p))
        for t in thetas
    )
    usable = [t for t in thetas if abs(moment_arm(t, p)) >= GAIN_EPSILON]
    expected_ratio = math.exp(2 * p.friction_mu * p.sheath_curvature_phi)
    ratio = max(
        abs(
            transmission_gain(t, MotorDirection.NEGATIVE, p)
            / transmission_gain(t, MotorDirection.NON_NEGATIVE, p)
            - expected_ratio
        )
        for t in usable
    )
    round_trip = 0.0
    for t in usable:
        for d in MotorDirection:
            for tau in (-3.0, 0.37, 2.732):
                back = assist_torque(motor_torque_for_assist(tau, t, d, p), t, d, p)
                round_trip = max(round_trip, abs(back - tau) / abs(tau))
    return [
        _le("h(0) == 0", abs(extension_length(0.0, p)), 0.0),
        _le("J_f(0) == -a", abs(moment_arm(0.0, p) + p.half_width_a), 1e-15),
        _le("J_f matches central difference of h", fd, 1e-6),
        _le("gain ratio NEGATIVE/NON_NEGATIVE == exp(2 mu phi)", ratio, 1e-12),
        _le("assist(motor_for_assist(x)) == x (relative)", round_trip, 1e-12),
    ]


def log_checks(log: TrajectoryLog) -> list[CheckResult]:
    sc = log.scenario
    theta_true = np.asarray(true_params(sc.arm))
    results = [
        _le("tau_a == G * tau_m", float(np.max(np.abs(log.tau_a - log.G * log.tau_m))), 1e-12),
        _le(
            "xi == tau_h + G tau_m - Z theta_hat",
            float(
                np.max(
                    np.abs(
                        log.xi - (log.tau_h + log.G * log.tau_m - np.sum(log.Z * log.theta_hat, axis=1))
                    )
                )
            ),
            1e-10,
        ),
        _le("e == theta - theta_r", float(np.max(np.abs(log.e - (log.theta - log.theta_r)))), 0.0),
    ]
    if sc.controller_mode is ControllerMode.AGC:
        tilde = theta_true - log.theta_hat
        arm, gains = sc.arm, sc.gains
        e_dot = log.theta_dot - log.theta_r_dot
        e_ddot = log.theta_ddot - log.theta_r_ddot
        forcing = arm.inertia_Ie * (e_ddot + gains.kd * e_dot + gains.kp * log.e) + log.Z[:, 2] * tilde[:, 2]
        results += [
            _le("xi == Z theta_tilde", float(np.max(np.abs(log.xi - np.sum(log.Z * tilde, axis=1)))), 1e-10),
            _le("V(k+1) - V(k) <= 0", float(max(np.max(np.diff(log.V)), 0.0)), 1e-8),
            _le("I_e(e'' + k_d e' + k_p e) + Y sigma_tilde == 0", float(np.max(np.abs(forcing))), 1e-8),
            _le(
                "|theta_tilde(t)| <= |theta_tilde(0)|",
                float(max(np.max(log.theta_tilde_norm) - log.theta_tilde_norm[0], 0.0)),
                1e-6,
            ),
        ]
    return results


def gc_exactness_check(sc: Scenario) -> CheckResult:
    log = run(sc.with_mode(ControllerMode.GC).with_zero_initial_error())
    return _le("GC from zero error keeps |e| small", float(np.max(np.abs(log.e))), 1e-6)


def run_all(sc: Scenario) -> list[CheckResult]:
    results = transmission_checks(sc.actuator)
    results += log_checks(run(sc))
    results.append(gc_exactness_check(sc))
    return results
