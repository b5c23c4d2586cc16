"""Fixed-step closed-loop simulation of forearm, human and exosuit controller."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, NamedTuple, Optional

import numpy as np

from .actuator import (
    ActuatorParams,
    CableMode,
    DegenerateGainError,
    MotorDirection,
    limit_motor_torque,
    motor_direction,
    raw_transmission_gain,
    transmission_gain,
)
from .arm import (
    ArmParams,
    JointState,
    ParamVector,
    forward_accel,
    gravity_regressor_Y,
    regressor,
    true_params,
    true_sigma,
)
from .control import (
    AdaptationConfig,
    HumanGains,
    ReferenceSample,
    adaptation_derivative,
    agc_motor_torque,
    extract_sigma_hat,
    gc_motor_torque,
    human_torque,
    lyapunov_value,
    prediction_error,
    sampled_adaptation_update,
    unassisted_human_torque,
)

logger = logging.getLogger(__name__)


class ControllerMode(enum.Enum):
    UNASSISTED = "unassisted"
    GC = "gc"
    AGC = "agc"


class ReferenceProfile(enum.Enum):
    """``SINE`` is ``A sin(wt)``; ``FLEXION`` is ``A sin^2(wt)``, which never goes below zero."""

    SINE = "sine"
    FLEXION = "flexion"


class AdaptationScheme(enum.Enum):
    """How the estimate is advanced between ticks.

    ``SAMPLED`` applies the exact held-regressor solution once per tick while
    the plant is integrated with the estimate held. ``RK4`` integrates the
    estimate as part of the augmented state; it is only stable when
    ``dt * |Z|^2 / lambda`` stays inside the RK4 stability region.
    """

    SAMPLED = "sampled"
    RK4 = "rk4"


class SingularPolicy(enum.Enum):
    """What the controller does when ``|J_f| < GAIN_EPSILON``.

    ``EXACT`` keeps inverting the raw gain, so the delivered assist is exact
    at the cost of very large motor torque for an instant (zero torque only if
    the gain is exactly zero). ``COAST`` commands zero motor torque inside the
    band. ``ERROR`` aborts the run.
    """

    EXACT = "exact"
    COAST = "coast"
    ERROR = "error"


class SimulationError(RuntimeError):
    def __init__(self, message: str, tick: Optional[int] = None, time: Optional[float] = None):
        self.tick = tick
        self.time = time
        super().__init__(message)


class DivergenceError(SimulationError):
    pass


@dataclass(frozen=True)
class Scenario:
    arm: ArmParams = field(default_factory=ArmParams)
    actuator: ActuatorParams = field(default_factory=ActuatorParams)
    gains: HumanGains = field(default_factory=HumanGains)
    adaptation: AdaptationConfig = field(default_factory=AdaptationConfig)
    controller_mode: ControllerMode = ControllerMode.AGC
    ref_amplitude: float = math.pi / 2
    ref_frequency: float = math.pi / 2
    duration: float = 4.0
    dt: float = 1e-3
    cable_mode: CableMode = CableMode.IDEAL
    theta_init: float = 0.0
    theta_dot_init: float = 0.0
    reference_profile: ReferenceProfile = ReferenceProfile.SINE
    adaptation_scheme: AdaptationScheme = AdaptationScheme.SAMPLED
    singular_policy: SingularPolicy = SingularPolicy.EXACT

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt!r}")
        if not (math.isfinite(self.duration) and self.duration >= self.dt):
            raise ValueError(f"duration must be >= dt, got {self.duration!r}")
        if not (0 < self.ref_amplitude < math.pi):
            raise ValueError(f"ref_amplitude must be in (0, pi), got {self.ref_amplitude!r}")
        if not (math.isfinite(self.ref_frequency) and self.ref_frequency > 0):
            raise ValueError(f"ref_frequency must be > 0, got {self.ref_frequency!r}")
        if not (math.isfinite(self.theta_init) and math.isfinite(self.theta_dot_init)):
            raise ValueError("initial joint state must be finite")

    @property
    def payload_M(self) -> float:
        return self.arm.payload_M

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def with_payload(self, M: float) -> "Scenario":
        return replace(self, arm=replace(self.arm, payload_M=float(M)))

    def with_mode(self, mode: ControllerMode) -> "Scenario":
        return replace(self, controller_mode=ControllerMode(mode))

    def with_zero_initial_error(self) -> "Scenario":
        ref = self.reference_at(0.0)
        return replace(self, theta_init=ref.theta_r, theta_dot_init=ref.theta_r_dot)

    def reference_at(self, t: float) -> ReferenceSample:
        return reference(t, self.ref_amplitude, self.ref_frequency, self.reference_profile)


@dataclass(frozen=True)
class SimState:
    time: float
    joint: JointState
    theta_hat: ParamVector

    @classmethod
    def initial(cls, scenario: Scenario) -> "SimState":
        return cls(
            0.0,
            JointState(scenario.theta_init, scenario.theta_dot_init),
            scenario.adaptation.theta_hat_init,
        )


@dataclass(frozen=True)
class TickRecord:
    time: float
    theta: float
    theta_r: float
    tracking_error_e: float
    tau_h: float
    tau_a: float
    tau_m: float
    G_used: float
    xi: float
    theta_hat: ParamVector
    theta_tilde_norm: float
    lyapunov_V: float


def reference(
    t: float,
    amplitude: float,
    frequency: float,
    profile: ReferenceProfile = ReferenceProfile.SINE,
) -> ReferenceSample:
    if t < 0:
        raise ValueError(f"reference time must be >= 0, got {t!r}")
    A, w = amplitude, frequency
    if profile is ReferenceProfile.SINE:
        s, c = math.sin(w * t), math.cos(w * t)
        return ReferenceSample(A * s, A * w * c, -A * w * w * s)
    s2, c2 = math.sin(2 * w * t), math.cos(2 * w * t)
    return ReferenceSample(0.5 * A * (1 - c2), A * w * s2, 2 * A * w * w * c2)


class Evaluation(NamedTuple):
    """Every signal computed in one pass through the closed loop."""

    ref: ReferenceSample
    tau_h: float
    direction: MotorDirection
    tau_m: float
    G: float
    tau_a: float
    theta_ddot: float
    Z: np.ndarray
    xi: float
    singular: bool = False


def evaluate(
    t: float, theta: float, theta_dot: float, theta_hat: ParamVector, scenario: Scenario
) -> Evaluation:
    if not (math.isfinite(theta) and math.isfinite(theta_dot)):
        raise DivergenceError(f"non-finite joint state at t={t!r}", time=t)
    arm, act = scenario.arm, scenario.actuator
    ref = scenario.reference_at(t)
    s = JointState(theta, theta_dot)
    mode = scenario.controller_mode
    direction = motor_direction(theta_dot)
    singular = False

    if mode is ControllerMode.UNASSISTED:
        tau_h = unassisted_human_torque(s, ref, arm, scenario.gains)
        G = raw_transmission_gain(theta, direction, act)
        tau_m = 0.0
    else:
        tau_h = human_torque(s, ref, arm, scenario.gains)
        sigma_cmd = true_sigma(arm) if mode is ControllerMode.GC else extract_sigma_hat(theta_hat)
        try:
            G = transmission_gain(theta, direction, act)
            if mode is ControllerMode.GC:
                tau_m = gc_motor_torque(theta, direction, arm, act)
            else:
                tau_m = agc_motor_torque(theta, direction, sigma_cmd, act, arm.gravity_g)
        except DegenerateGainError:
            policy = scenario.singular_policy
            if policy is SingularPolicy.ERROR:
                raise
            G = raw_transmission_gain(theta, direction, act)
            singular = True
            if policy is SingularPolicy.EXACT and G > 0.0:
                tau_m = gravity_regressor_Y(theta, arm.gravity_g) * sigma_cmd / G
            else:
                tau_m = 0.0
        tau_m = limit_motor_torque(tau_m, scenario.cable_mode)
    tau_a = G * tau_m

    theta_ddot = forward_accel(s, arm, tau_h, tau_a)
    Z = regressor(theta_ddot, s, arm.gravity_g)
    xi = prediction_error(tau_h, tau_m, Z, theta_hat, G)
    return Evaluation(ref, tau_h, direction, tau_m, G, tau_a, theta_ddot, Z, xi, singular)


def _check_finite(t: float, *values: float) -> None:
    if not all(math.isfinite(v) for v in values):
        raise DivergenceError(f"non-finite state after step ending at t={t!r}: {values!r}", time=t)


def _advance(
    t: float,
    theta: float,
    theta_dot: float,
    theta_hat: ParamVector,
    scenario: Scenario,
    first: Evaluation,
) -> tuple[float, float, ParamVector]:
    """One RK4 step from ``t``; ``first`` is the evaluation at the start of the step."""
    h = scenario.dt
    agc = scenario.controller_mode is ControllerMode.AGC
    cfg = scenario.adaptation

    if agc and scenario.adaptation_scheme is AdaptationScheme.RK4:
        x0 = np.array([theta, theta_dot, *theta_hat])

        def deriv(ev: Evaluation, x: np.ndarray) -> np.ndarray:
            return np.concatenate(([x[1], ev.theta_ddot], adaptation_derivative(ev.Z, ev.xi, cfg)))

        def at(tt: float, x: np.ndarray) -> np.ndarray:
            return deriv(evaluate(tt, x[0], x[1], ParamVector.from_array(x[2:]), scenario), x)

        k1 = deriv(first, x0)
        k2 = at(t + h / 2, x0 + h / 2 * k1)
        k3 = at(t + h / 2, x0 + h / 2 * k2)
        k4 = at(t + h, x0 + h * k3)
        x1 = x0 + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        _check_finite(t + h, *x1)
        return float(x1[0]), float(x1[1]), ParamVector.from_array(x1[2:])

    def accel(tt: float, q: float, qd: float) -> float:
        return evaluate(tt, q, qd, theta_hat, scenario).theta_ddot

    # Plant integrated with the estimate held over the sample (zero-order hold).
    a1 = first.theta_ddot
    q2, v2 = theta + h / 2 * theta_dot, theta_dot + h / 2 * a1
    a2 = accel(t + h / 2, q2, v2)
    q3, v3 = theta + h / 2 * v2, theta_dot + h / 2 * a2
    a3 = accel(t + h / 2, q3, v3)
    q4, v4 = theta + h * v3, theta_dot + h * a3
    a4 = accel(t + h, q4, v4)
    theta_new = theta + h / 6 * (theta_dot + 2 * v2 + 2 * v3 + v4)
    theta_dot_new = theta_dot + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)

    if agc:
        theta_hat = sampled_adaptation_update(theta_hat, first.Z, first.xi, cfg, h)
    _check_finite(t + h, theta_new, theta_dot_new, *theta_hat)
    return theta_new, theta_dot_new, theta_hat


def step(state: SimState, scenario: Scenario) -> SimState:
    """Advance the closed loop by one ``scenario.dt``."""
    j = state.joint
    first = evaluate(state.time, j.theta, j.theta_dot, state.theta_hat, scenario)
    theta, theta_dot, theta_hat = _advance(
        state.time, j.theta, j.theta_dot, state.theta_hat, scenario, first
    )
    return SimState(state.time + scenario.dt, JointState(theta, theta_dot), theta_hat)


_COLUMNS = (
    "time",
    "theta",
    "theta_dot",
    "theta_ddot",
    "theta_r",
    "theta_r_dot",
    "theta_r_ddot",
    "e",
    "tau_h",
    "tau_a",
    "tau_m",
    "G",
    "xi",
    "theta_tilde_norm",
    "V",
)


@dataclass(eq=False)
class TrajectoryLog:
    """Per-tick signals of one run, stored column-wise.

    ``theta_hat`` and ``Z`` are ``(n, 3)`` arrays; every other column is 1-D.
    Indexing or iterating yields :class:`TickRecord` rows.
    """

    scenario: Scenario
    time: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    theta_ddot: np.ndarray
    theta_r: np.ndarray
    theta_r_dot: np.ndarray
    theta_r_ddot: np.ndarray
    e: np.ndarray
    tau_h: np.ndarray
    tau_a: np.ndarray
    tau_m: np.ndarray
    G: np.ndarray
    xi: np.ndarray
    theta_tilde_norm: np.ndarray
    V: np.ndarray
    theta_hat: np.ndarray
    Z: np.ndarray

    def __len__(self) -> int:
        return len(self.time)

    def __getitem__(self, i: int) -> TickRecord:
        return TickRecord(
            time=float(self.time[i]),
            theta=float(self.theta[i]),
            theta_r=float(self.theta_r[i]),
            tracking_error_e=float(self.e[i]),
            tau_h=float(self.tau_h[i]),
            tau_a=float(self.tau_a[i]),
            tau_m=float(self.tau_m[i]),
            G_used=float(self.G[i]),
            xi=float(self.xi[i]),
            theta_hat=ParamVector.from_array(self.theta_hat[i]),
            theta_tilde_norm=float(self.theta_tilde_norm[i]),
            lyapunov_V=float(self.V[i]),
        )

    def __iter__(self) -> Iterator[TickRecord]:
        return (self[i] for i in range(len(self)))

    @property
    def records(self) -> list[TickRecord]:
        return list(self)

    @property
    def sigma_hat(self) -> np.ndarray:
        return self.theta_hat[:, 2]

    def window(self, t_start: float, t_end: float) -> np.ndarray:
        """Boolean mask of ticks with ``t_start <= t <= t_end`` (1e-9 s slack)."""
        return (self.time >= t_start - 1e-9) & (self.time <= t_end + 1e-9)


def run(scenario: Scenario) -> TrajectoryLog:
    n = scenario.n_steps
    dt = scenario.dt
    cols = {name: np.empty(n + 1) for name in _COLUMNS}
    theta_hat_log = np.empty((n + 1, 3))
    z_log = np.empty((n + 1, 3))
    truth = true_params(scenario.arm)
    cfg = scenario.adaptation

    theta, theta_dot = scenario.theta_init, scenario.theta_dot_init
    theta_hat = cfg.theta_hat_init
    singular_ticks = 0
    for k in range(n + 1):
        t = k * dt
        try:
            ev = evaluate(t, theta, theta_dot, theta_hat, scenario)
        except DegenerateGainError as exc:
            raise SimulationError(f"tick {k} (t={t:.6g} s): {exc}", tick=k, time=t) from exc
        singular_ticks += ev.singular
        tilde = truth.minus(theta_hat)
        cols["time"][k] = t
        cols["theta"][k] = theta
        cols["theta_dot"][k] = theta_dot
        cols["theta_ddot"][k] = ev.theta_ddot
        cols["theta_r"][k] = ev.ref.theta_r
        cols["theta_r_dot"][k] = ev.ref.theta_r_dot
        cols["theta_r_ddot"][k] = ev.ref.theta_r_ddot
        cols["e"][k] = theta - ev.ref.theta_r
        cols["tau_h"][k] = ev.tau_h
        cols["tau_a"][k] = ev.tau_a
        cols["tau_m"][k] = ev.tau_m
        cols["G"][k] = ev.G
        cols["xi"][k] = ev.xi
        cols["theta_tilde_norm"][k] = tilde.norm()
        cols["V"][k] = lyapunov_value(tilde, cfg)
        theta_hat_log[k] = theta_hat
        z_log[k] = ev.Z
        if k == n:
            break
        try:
            theta, theta_dot, theta_hat = _advance(t, theta, theta_dot, theta_hat, scenario, ev)
        except DegenerateGainError as exc:
            raise SimulationError(f"tick {k} (t={t:.6g} s): {exc}", tick=k, time=t) from exc
        except DivergenceError as exc:
            raise DivergenceError(f"tick {k}: {exc}", tick=k, time=t) from exc

    log = TrajectoryLog(scenario=scenario, theta_hat=theta_hat_log, Z=z_log, **cols)
    if singular_ticks:
        logger.info(
            "moment arm singular on %d ticks (policy %s)",
            singular_ticks,
            scenario.singular_policy.value,
        )
    if scenario.controller_mode is ControllerMode.AGC:
        negative = int(np.count_nonzero(log.sigma_hat < 0))
        if negative:
            logger.warning("sigma_hat was negative on %d of %d ticks", negative, n + 1)
    return log
