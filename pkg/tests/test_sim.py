import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exosim.actuator import CableMode
from exosim.arm import true_params, true_sigma
from exosim.control import AdaptationConfig
from exosim.sim import (
    AdaptationScheme,
    ControllerMode,
    DivergenceError,
    ReferenceProfile,
    Scenario,
    SimState,
    SimulationError,
    SingularPolicy,
    evaluate,
    reference,
    run,
    step,
)

BASE = Scenario()
A = W = math.pi / 2


class TestReference:
    def test_start(self):
        r = reference(0.0, A, W)
        assert r.theta_r == 0.0
        assert r.theta_r_dot == pytest.approx(2.4674, abs=1e-4)
        assert r.theta_r_ddot == 0.0

    def test_peak(self):
        r = reference(1.0, A, W)
        assert r.theta_r == pytest.approx(math.pi / 2, abs=1e-12)
        assert abs(r.theta_r_dot) < 1e-12
        assert r.theta_r_ddot == pytest.approx(-3.8758, abs=1e-4)

    @pytest.mark.parametrize("profile", list(ReferenceProfile))
    @given(t=st.floats(0.01, 4.0))
    def test_derivatives_match_central_difference(self, profile, t):
        h = 1e-5
        r = reference(t, A, W, profile)
        lo, hi = reference(t - h, A, W, profile), reference(t + h, A, W, profile)
        assert r.theta_r_dot == pytest.approx((hi.theta_r - lo.theta_r) / (2 * h), abs=1e-7)
        assert r.theta_r_ddot == pytest.approx((hi.theta_r_dot - lo.theta_r_dot) / (2 * h), abs=1e-6)

    @given(st.floats(0, 10))
    def test_flexion_profile_stays_in_range(self, t):
        assert 0.0 <= reference(t, A, W, ReferenceProfile.FLEXION).theta_r <= A + 1e-15

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            reference(-0.1, A, W)


@pytest.mark.parametrize(
    "kwargs",
    [{"dt": 0.0}, {"dt": -1e-3}, {"duration": 1e-4}, {"ref_amplitude": 4.0}, {"ref_frequency": 0.0}, {"theta_init": math.inf}],
)
def test_invalid_scenario(kwargs):
    with pytest.raises(ValueError):
        Scenario(**kwargs)


def test_scenario_helpers():
    assert BASE.n_steps == 4000
    assert BASE.with_payload(3).payload_M == 3.0
    assert BASE.with_mode(ControllerMode.GC).controller_mode is ControllerMode.GC
    zs = BASE.with_zero_initial_error()
    assert zs.theta_init == 0.0 and zs.theta_dot_init == pytest.approx(2.4674, abs=1e-4)


class TestStep:
    def test_unassisted_single_step_from_rest(self):
        sc = BASE.with_mode(ControllerMode.UNASSISTED)
        s1 = step(SimState.initial(sc), sc)
        assert s1.time == pytest.approx(1e-3)
        assert abs(s1.joint.theta) < 1e-2

    def test_estimate_frozen_outside_agc(self):
        for mode in (ControllerMode.UNASSISTED, ControllerMode.GC):
            sc = BASE.with_mode(mode)
            s = SimState.initial(sc)
            for _ in range(20):
                s = step(s, sc)
            assert s.theta_hat == sc.adaptation.theta_hat_init

    def test_run_matches_repeated_step(self):
        sc = replace(BASE, duration=0.05)
        log = run(sc)
        s = SimState.initial(sc)
        for _ in range(sc.n_steps):
            s = step(s, sc)
        assert s.joint.theta == log.theta[-1]
        np.testing.assert_array_equal(np.asarray(s.theta_hat), log.theta_hat[-1])


class TestRun:
    def test_record_count_and_grid(self):
        log = run(BASE.with_mode(ControllerMode.GC))
        assert len(log) == 4001
        assert log.time[0] == 0.0 and log.time[-1] == pytest.approx(4.0, abs=1e-12)
        assert len(log.records) == 4001

    def test_deterministic(self):
        a, b = run(BASE), run(BASE)
        for name in ("theta", "tau_h", "tau_m", "xi", "V", "theta_hat"):
            np.testing.assert_array_equal(getattr(a, name), getattr(b, name))

    def test_gc_zero_error_start_tracks_exactly(self):
        log = run(BASE.with_mode(ControllerMode.GC).with_zero_initial_error())
        assert np.max(np.abs(log.e)) < 1e-6

    def test_halving_dt_changes_gc_final_angle_very_little(self):
        sc = BASE.with_mode(ControllerMode.GC)
        coarse, fine = run(sc), run(replace(sc, dt=sc.dt / 2))
        assert abs(coarse.theta[-1] - fine.theta[-1]) < 1e-8

    @pytest.mark.parametrize("mode", list(ControllerMode))
    def test_tick_invariants(self, mode):
        log = run(BASE.with_payload(3.0).with_mode(mode))
        np.testing.assert_allclose(log.tau_a, log.G * log.tau_m, atol=1e-12)
        np.testing.assert_array_equal(log.e, log.theta - log.theta_r)
        predicted = log.tau_h + log.G * log.tau_m - np.sum(log.Z * log.theta_hat, axis=1)
        np.testing.assert_allclose(log.xi, predicted, atol=1e-10)
        if mode is ControllerMode.UNASSISTED:
            assert np.all(log.tau_m == 0.0) and np.all(log.tau_a == 0.0)

    def test_window(self):
        log = run(replace(BASE, duration=0.01))
        mask = log.window(0.003, 0.005)
        np.testing.assert_allclose(log.time[mask], [0.003, 0.004, 0.005])


class TestAGC:
    @pytest.mark.parametrize("M", [0.0, 3.0, 5.0, 10.0])
    def test_lyapunov_descent_and_boundedness(self, M):
        log = run(BASE.with_payload(M))
        assert np.max(np.diff(log.V)) <= 1e-8
        assert np.max(log.theta_tilde_norm) <= log.theta_tilde_norm[0] + 1e-6

    def test_prediction_error_is_regressor_times_estimation_error(self):
        log = run(BASE.with_payload(5.0))
        tilde = np.asarray(true_params(log.scenario.arm)) - log.theta_hat
        assert np.max(np.abs(log.xi - np.sum(log.Z * tilde, axis=1))) <= 1e-10

    def test_error_dynamics_forced_by_sigma_error(self):
        log = run(BASE)
        arm, g = log.scenario.arm, log.scenario.gains
        sig_tilde = true_sigma(arm) - log.sigma_hat
        lhs = arm.inertia_Ie * (
            (log.theta_ddot - log.theta_r_ddot) + g.kd * (log.theta_dot - log.theta_r_dot) + g.kp * log.e
        )
        assert np.max(np.abs(lhs + log.Z[:, 2] * sig_tilde)) <= 1e-8

    @settings(max_examples=4, deadline=None)
    @given(st.sampled_from([0.0, 3.0, 5.0, 10.0]))
    def test_true_initial_estimate_reduces_to_gc(self, M):
        sc = replace(BASE, duration=1.0).with_payload(M)
        sc = replace(sc, adaptation=AdaptationConfig(theta_hat_init=true_params(sc.arm)))
        agc, gc = run(sc), run(sc.with_mode(ControllerMode.GC))
        assert np.max(np.abs(agc.theta - gc.theta)) <= 1e-9
        assert np.max(np.abs(agc.tau_h - gc.tau_h)) <= 1e-9

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_augmented_rk4_diverges_at_default_step(self):
        with pytest.raises(DivergenceError) as info:
            run(replace(BASE, adaptation_scheme=AdaptationScheme.RK4))
        assert info.value.tick is not None

    def test_augmented_rk4_stable_with_small_step(self):
        sc = replace(BASE, duration=0.5, dt=1e-4, adaptation_scheme=AdaptationScheme.RK4)
        log = run(sc)
        assert np.all(np.isfinite(log.theta_hat))


class TestSingularity:
    # the full-sine reference dips to -pi/2 and crosses the singular angle -0.927 rad
    def test_error_policy_reports_tick(self):
        with pytest.raises(SimulationError) as info:
            run(replace(BASE, singular_policy=SingularPolicy.ERROR).with_mode(ControllerMode.GC))
        assert info.value.tick is not None and info.value.time > 2.0

    def test_coast_policy_runs_through(self):
        log = run(replace(BASE, singular_policy=SingularPolicy.COAST).with_mode(ControllerMode.GC))
        assert np.all(np.isfinite(log.theta))

    def test_evaluate_flags_singular_tick(self):
        theta = -2 * math.atan(0.5)
        sc = BASE.with_mode(ControllerMode.GC)
        ev = evaluate(2.6, theta, -1.0, sc.adaptation.theta_hat_init, sc)
        assert ev.singular
        coast = evaluate(2.6, theta, -1.0, sc.adaptation.theta_hat_init, replace(sc, singular_policy=SingularPolicy.COAST))
        assert coast.tau_m == 0.0

    def test_non_finite_state(self):
        with pytest.raises(DivergenceError):
            evaluate(0.0, math.nan, 0.0, BASE.adaptation.theta_hat_init, BASE)


def test_physical_cable_never_pushes():
    log = run(replace(BASE, cable_mode=CableMode.PHYSICAL).with_mode(ControllerMode.GC))
    assert np.all(log.tau_m >= 0.0)
    assert np.any(log.tau_m > 0.0)


def test_flexion_profile_avoids_singularity():
    log = run(replace(BASE, reference_profile=ReferenceProfile.FLEXION).with_mode(ControllerMode.GC).with_zero_initial_error())
    assert np.max(np.abs(log.e)) < 1e-6
    assert np.min(log.theta) > -1e-6
