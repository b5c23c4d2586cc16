import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from exosim.actuator import ActuatorParams, MotorDirection, assist_torque, transmission_gain
from exosim.arm import ArmParams, JointState, ParamVector, inverse_dynamics, regressor, true_params, true_sigma
from exosim.control import (
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

ARM, ACT, GAINS, CFG = ArmParams(), ActuatorParams(), HumanGains(), AdaptationConfig()
NN, NEG = MotorDirection.NON_NEGATIVE, MotorDirection.NEGATIVE
usable_theta = st.floats(-0.9, math.pi)  # clear of the singular moment arm at -0.927
vec3 = st.lists(st.floats(-5, 5), min_size=3, max_size=3)


def test_defaults():
    assert (GAINS.kp, GAINS.kd) == (25.0, 10.0)
    assert CFG.lambda_diag == (0.05, 0.05, 0.05)
    assert CFG.theta_hat_init == ParamVector(0.1, 0.1, 0.1)


@pytest.mark.parametrize(
    "make",
    [
        lambda: HumanGains(kp=0.0),
        lambda: HumanGains(kd=-1.0),
        lambda: AdaptationConfig(lambda_diag=(0.05, 0.0, 0.05)),
        lambda: AdaptationConfig(lambda_diag=(0.05, 0.05)),
        lambda: AdaptationConfig(theta_hat_init=(math.nan, 0.0, 0.0)),
    ],
)
def test_invalid_configs(make):
    with pytest.raises(ValueError):
        make()


class TestHumanTorque:
    def test_all_terms_vanish(self):
        assert human_torque(JointState(0.0, 0.0), ReferenceSample(0.0, 0.0, 0.0), ARM, GAINS) == 0.0

    def test_zero_error_start(self):
        rd = math.pi**2 / 4
        assert human_torque(JointState(0.0, rd), ReferenceSample(0.0, rd, 0.0), ARM, GAINS) == 0.0

    def test_position_error(self):
        tau = human_torque(JointState(0.1, 0.0), ReferenceSample(0.0, 0.0, 0.0), ARM, GAINS)
        assert tau == pytest.approx(-0.05025, abs=1e-12)

    @given(st.floats(-2, 2), st.floats(-5, 5), st.floats(-2, 2), st.floats(-5, 5), st.floats(-10, 10))
    def test_cancelled_gravity_gives_pd_error_dynamics(self, q, qd, r, rd, rdd):
        # I_e * theta_ddot = tau_h under perfect gravity compensation
        s, ref = JointState(q, qd), ReferenceSample(r, rd, rdd)
        arm = replace(ARM, damping_be=0.4)
        theta_ddot = (human_torque(s, ref, arm, GAINS) - arm.damping_be * qd) / arm.inertia_Ie
        e, ed, edd = q - r, qd - rd, theta_ddot - rdd
        assert edd + GAINS.kd * ed + GAINS.kp * e == pytest.approx(0.0, abs=1e-9)

    def test_unassisted_human_adds_gravity(self):
        s, ref = JointState(math.pi / 2, 0.0), ReferenceSample(math.pi / 2, 0.0, 0.0)
        assert unassisted_human_torque(s, ref, ARM, GAINS) == pytest.approx(true_sigma(ARM) * 9.81)


class TestGC:
    def test_zero_at_hang(self):
        assert gc_motor_torque(0.0, NN, ARM, ACT) == 0.0

    def test_horizontal(self):
        assert gc_motor_torque(math.pi / 2, NN, ARM, ACT) == pytest.approx(0.0385, abs=1e-4)

    @given(usable_theta, st.sampled_from([NN, NEG]), st.sampled_from([0.0, 3.0, 5.0, 10.0]))
    def test_delivers_gravity_moment(self, theta, d, M):
        arm = replace(ARM, payload_M=M)
        delivered = assist_torque(gc_motor_torque(theta, d, arm, ACT), theta, d, ACT)
        assert delivered == pytest.approx(true_sigma(arm) * 9.81 * math.sin(theta), abs=1e-10)


class TestAGC:
    def test_zero_estimate(self):
        assert agc_motor_torque(1.0, NN, 0.0, ACT) == 0.0

    def test_example(self):
        # 0.013827 was computed with G rounded to 70.95; the exact gain is 70.9396
        assert agc_motor_torque(math.pi / 2, NN, 0.1, ACT, 9.81) == pytest.approx(0.013827, abs=3e-6)

    @given(usable_theta, st.sampled_from([NN, NEG]))
    def test_true_estimate_reduces_to_gc(self, theta, d):
        assert agc_motor_torque(theta, d, true_sigma(ARM), ACT, 9.81) == gc_motor_torque(theta, d, ARM, ACT)


class TestPredictionError:
    def _plant_data(self, q, qd, qdd, arm, d, frac):
        """Split the true net torque between human and motor like the closed loop does."""
        net = inverse_dynamics(q, qd, qdd, arm)
        G = transmission_gain(q, d, ACT)
        tau_m = frac * net / G
        tau_h = net - G * tau_m
        return tau_h, tau_m, G, regressor(qdd, JointState(q, qd), arm.gravity_g)

    def test_true_estimate_gives_zero(self):
        arm = replace(ARM, payload_M=3.0)
        tau_h, tau_m, G, Z = self._plant_data(0.7, 1.1, -4.0, arm, NN, 0.6)
        assert abs(prediction_error(tau_h, tau_m, Z, true_params(arm), G)) <= 1e-10

    @given(usable_theta, st.floats(-5, 5), st.floats(-200, 200), vec3, st.floats(0, 1), st.sampled_from([NN, NEG]))
    def test_equals_regressor_times_estimation_error(self, q, qd, qdd, hat, frac, d):
        arm = replace(ARM, damping_be=0.2, payload_M=5.0)
        tau_h, tau_m, G, Z = self._plant_data(q, qd, qdd, arm, d, frac)
        theta_hat = ParamVector(*hat)
        tilde = true_params(arm).minus(theta_hat)
        assert prediction_error(tau_h, tau_m, Z, theta_hat, G) == pytest.approx(
            float(Z @ np.asarray(tilde)), abs=1e-10
        )

    def test_zero_regressor(self):
        assert prediction_error(0.3, -0.3, np.zeros(3), ParamVector(4.0, 5.0, 6.0), 1.0) == 0.0


class TestAdaptation:
    def test_zero_error(self):
        np.testing.assert_array_equal(adaptation_derivative(np.array([1.0, 2.0, 3.0]), 0.0, CFG), [0, 0, 0])

    def test_example(self):
        got = adaptation_derivative(np.array([1.0, 2.0, 9.81]), 0.5, CFG)
        np.testing.assert_allclose(got, [10.0, 20.0, 98.1], rtol=1e-14)

    @given(vec3, st.floats(-10, 10))
    def test_sign_follows_z_times_xi(self, z, xi):
        rate = adaptation_derivative(np.array(z), xi, CFG)
        assert np.all(np.sign(rate) == np.sign(np.array(z) * xi))

    def test_sampled_update_matches_ode_solution(self):
        # Oracle: integrate theta_hat' = Lambda^-1 Z^T (y - Z theta_hat) with Z frozen.
        cfg = AdaptationConfig(lambda_diag=(0.05, 0.2, 0.01))
        Z = np.array([25.0, 2.4, 5.0])
        truth = np.array([0.0201, 0.0, 0.27848])
        hat0 = np.array([0.1, 0.1, 0.1])
        y = Z @ truth
        dt = 1e-3

        def rhs(_, h):
            return cfg.inverse_gain * Z * (y - Z @ h)

        sol = solve_ivp(rhs, (0, dt), hat0, method="Radau", rtol=1e-12, atol=1e-14)
        xi = float(Z @ (truth - hat0))
        got = sampled_adaptation_update(ParamVector(*hat0), Z, xi, cfg, dt)
        np.testing.assert_allclose(np.asarray(got), sol.y[:, -1], rtol=0, atol=1e-10)

    def test_sampled_update_small_gain_is_euler(self):
        Z, xi, dt = np.array([1e-9, 0.0, 0.0]), 1.0, 1e-3
        got = sampled_adaptation_update(ParamVector(0.0, 0.0, 0.0), Z, xi, CFG, dt)
        np.testing.assert_allclose(np.asarray(got), adaptation_derivative(Z, xi, CFG) * dt, rtol=1e-9)

    @settings(max_examples=200)
    @given(
        st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3),
        vec3,
        st.lists(st.floats(1e-3, 10), min_size=3, max_size=3),
        st.floats(1e-5, 1e-1),
    )
    def test_sampled_update_never_increases_lyapunov(self, z, tilde, lam, dt):
        cfg = AdaptationConfig(lambda_diag=tuple(lam), theta_hat_init=ParamVector(0, 0, 0))
        truth = np.array([1.0, -2.0, 0.5])
        hat = ParamVector(*(truth - np.array(tilde)))
        Z = np.array(z)
        xi = float(Z @ np.array(tilde))
        new = sampled_adaptation_update(hat, Z, xi, cfg, dt)
        before = lyapunov_value(ParamVector(*tilde), cfg)
        after = lyapunov_value(ParamVector(*(truth - np.asarray(new))), cfg)
        assert after <= before + 1e-12 * max(1.0, before)


class TestLyapunov:
    def test_zero(self):
        assert lyapunov_value(ParamVector(0.0, 0.0, 0.0), CFG) == 0.0

    def test_example(self):
        assert lyapunov_value(ParamVector(1.0, 0.0, 0.0), CFG) == pytest.approx(0.025, rel=1e-15)

    @given(vec3, st.floats(-10, 10))
    def test_quadratic_scaling(self, v, alpha):
        tilde = ParamVector(*v)
        scaled = ParamVector(*(alpha * np.array(v)))
        assert lyapunov_value(scaled, CFG) == pytest.approx(alpha**2 * lyapunov_value(tilde, CFG), rel=1e-12, abs=1e-300)

    @given(vec3)
    def test_positive_definite(self, v):
        V = lyapunov_value(ParamVector(*v), CFG)
        assert V >= 0
        if any(abs(x) > 1e-100 for x in v):
            assert V > 0


def test_extract_sigma_hat():
    assert extract_sigma_hat(ParamVector(0.1, 0.1, 0.1)) == 0.1
    assert extract_sigma_hat(ParamVector(5.0, 7.0, 0.0)) == 0.0
    assert extract_sigma_hat(ParamVector(1.0, 2.0, 3.0)) == 3.0
