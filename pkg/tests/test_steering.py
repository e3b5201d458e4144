import math

import numpy as np
import pytest

from beamsim.errors import OutOfRange, TangentSingularity
from beamsim.steering import (
    MirrorModel,
    MirrorState,
    SteeringController,
    controller_gain,
    image_shift_approx,
    image_shift_exact,
    mirror_error_budget,
    quantize_angle,
    settle_time,
    steer_update,
)

DEG = math.radians(1.0)


class TestImageShift:
    def test_reference_case(self):
        # 1 m, 45 deg base angle, 0.1 deg error: just under 3.5 mm
        shift = image_shift_exact(1.0, 45 * DEG, 0.1 * DEG)
        assert shift == pytest.approx(3.497e-3, rel=1e-3)
        assert abs(shift - 3.5e-3) / 3.5e-3 < 0.005

    def test_zero_error(self):
        assert image_shift_exact(2.7, 31 * DEG, 0.0) == 0.0

    def test_on_axis(self):
        assert image_shift_exact(1.0, 0.0, 0.1 * DEG) == \
            pytest.approx(math.tan(0.1 * DEG))
        assert image_shift_exact(1.0, 0.0, 0.1 * DEG) == \
            pytest.approx(1.745e-3, rel=1e-3)

    def test_singularity_guard(self):
        with pytest.raises(TangentSingularity):
            image_shift_exact(1.0, 89.9999999 * DEG, 0.1 * DEG)
        with pytest.raises(TangentSingularity):
            image_shift_exact(1.0, 89.95 * DEG, 0.1 * DEG)

    def test_linear_in_distance(self):
        s1 = image_shift_exact(1.0, 30 * DEG, 0.05 * DEG)
        assert image_shift_exact(4.5, 30 * DEG, 0.05 * DEG) == \
            pytest.approx(4.5 * s1, rel=1e-12)

    def test_monotone_in_base_angle(self):
        thetas = np.linspace(0.0, 80.0, 81) * DEG
        shifts = [image_shift_exact(1.0, t, 0.1 * DEG) for t in thetas]
        assert np.all(np.diff(shifts) > 0)


class TestImageShiftApprox:
    def test_reference_case(self):
        approx = image_shift_approx(1.0, 45 * DEG, 0.1 * DEG)
        assert approx == pytest.approx(3.491e-3, rel=1e-3)
        exact = image_shift_exact(1.0, 45 * DEG, 0.1 * DEG)
        assert abs(approx - exact) / exact <= 0.002

    def test_on_axis_reduces_to_product(self):
        assert image_shift_approx(2.0, 0.0, 0.07 * DEG) == \
            pytest.approx(2.0 * 0.07 * DEG)

    def test_relative_error_bound_on_grid(self):
        for theta in np.arange(0.0, 60.01, 2.5):
            for dtheta in np.arange(0.01, 0.2001, 0.01):
                exact = image_shift_exact(1.0, theta * DEG, dtheta * DEG)
                approx = image_shift_approx(1.0, theta * DEG, dtheta * DEG)
                assert abs(approx - exact) / exact <= 0.01


class TestSettleTime:
    M = MirrorModel()

    def test_published_knots(self):
        assert settle_time(self.M, 0.1 * DEG) == 0.002
        assert settle_time(self.M, 20 * DEG) == 0.012

    def test_midpoint(self):
        assert settle_time(self.M, 10.05 * DEG) == pytest.approx(0.007)

    def test_zero_step(self):
        assert settle_time(self.M, 0.0) == 0.0

    def test_clamped_beyond_last_knot(self):
        assert settle_time(self.M, 35 * DEG) == 0.012

    def test_symmetric_in_sign(self):
        assert settle_time(self.M, -0.1 * DEG) == 0.002

    def test_below_first_knot_interpolates_from_zero(self):
        assert settle_time(self.M, 0.05 * DEG) == pytest.approx(0.001)


class TestQuantize:
    M = MirrorModel()

    def test_zero(self):
        assert quantize_angle(self.M, 0.0) == 0.0

    def test_tie_rounds_away_from_zero(self):
        assert quantize_angle(self.M, 33e-6) == pytest.approx(44e-6)
        assert quantize_angle(self.M, -33e-6) == pytest.approx(-44e-6)

    def test_nearest_multiple(self):
        assert quantize_angle(self.M, 100e-6) == pytest.approx(110e-6)
        assert quantize_angle(self.M, 95e-6) == pytest.approx(88e-6)

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            quantize_angle(self.M, math.radians(16.0))

    def test_result_is_grid_multiple(self):
        rng = np.random.default_rng(2)
        for _ in range(500):
            a = rng.uniform(-self.M.max_angle, self.M.max_angle)
            q = quantize_angle(self.M, a)
            steps = q / self.M.step_resolution
            assert abs(steps - round(steps)) < 1e-6
            assert abs(q - a) <= self.M.step_resolution * (0.5 + 1e-9)


class TestSteerUpdate:
    M = MirrorModel()
    C = SteeringController(gain=10e-6, deadband=5.0)

    def test_zero_offset_no_command(self):
        state = MirrorState()
        new, commanded = steer_update(self.C, self.M, state, (0.0, 0.0), 0.0)
        assert not commanded and new == state

    def test_below_deadband_no_command(self):
        state = MirrorState()
        new, commanded = steer_update(self.C, self.M, state, (3.0, 0.0), 0.0)
        assert not commanded and new == state

    def test_commanded_step_quantized(self):
        state = MirrorState()
        new, commanded = steer_update(self.C, self.M, state, (100.0, 0.0), 0.0)
        assert commanded
        # 1000 urad requested snaps to 45 steps of 22 urad
        assert new.theta == pytest.approx(990e-6)
        assert new.phi == 0.0
        assert new.busy_until == pytest.approx(settle_time(self.M, 990e-6))

    def test_lockout_until_settled(self):
        state = MirrorState()
        state, _ = steer_update(self.C, self.M, state, (100.0, 0.0), 0.0)
        locked, commanded = steer_update(self.C, self.M, state, (100.0, 0.0),
                                         state.busy_until / 2.0)
        assert not commanded and locked == state
        # identical call while busy is idempotent
        again, commanded = steer_update(self.C, self.M, locked, (100.0, 0.0),
                                        state.busy_until / 2.0)
        assert not commanded and again == locked
        # free again exactly at busy_until
        free, commanded = steer_update(self.C, self.M, state, (100.0, 0.0),
                                       state.busy_until)
        assert commanded

    def test_angles_stay_quantized_and_bounded(self):
        rng = np.random.default_rng(3)
        state = MirrorState()
        now = 0.0
        for _ in range(300):
            offset = tuple(rng.uniform(-4e5, 4e5, size=2))
            state, commanded = steer_update(self.C, self.M, state, offset, now)
            now = max(now, state.busy_until) + 1e-3
            for angle in (state.theta, state.phi):
                steps = angle / self.M.step_resolution
                assert abs(steps - round(steps)) < 1e-6
                assert abs(angle) <= self.M.max_angle + 1e-12

    def test_closed_loop_convergence(self):
        # pure controller loop against a static angular target, detuned gain
        # so convergence takes several commands; offset must shrink
        # monotonically until it is below deadband plus one mirror step
        fx = 7200.0
        beam = self.M.beam_deflection_factor
        ctrl = SteeringController(gain=0.4 * controller_gain(fx, beam),
                                  deadband=2.0)
        target = math.radians(2.0)  # optical bearing of the static target
        state = MirrorState()
        now = 0.0

        def observe(state):
            return fx * math.tan(target - beam * state.theta)

        offsets = [abs(observe(state))]
        for _ in range(40):
            dx = observe(state)
            if abs(dx) <= ctrl.deadband:
                break
            state, commanded = steer_update(ctrl, self.M, state, (dx, 0.0), now)
            assert commanded
            now = state.busy_until + 1e-4
            offsets.append(abs(observe(state)))
        step_px = beam * self.M.step_resolution * fx
        assert offsets[-1] <= ctrl.deadband + step_px
        assert all(b < a for a, b in zip(offsets, offsets[1:]))


class TestErrorBudget:
    M = MirrorModel()

    def test_matches_tangent_model(self):
        shift, fraction = mirror_error_budget(self.M, 1.0, 45 * DEG,
                                              15e-6, 0.020)
        expected = image_shift_exact(1.0, 45 * DEG,
                                     self.M.beam_deflection_factor * 15e-6)
        assert shift == expected
        assert fraction == expected / 0.020
        assert shift == pytest.approx(60.0e-6, rel=1e-3)
        assert fraction == pytest.approx(0.0030, rel=1e-3)

    def test_zero_repeatability(self):
        assert mirror_error_budget(self.M, 1.0, 45 * DEG, 0.0, 0.02) == (0, 0)

    def test_monotone_in_angle(self):
        shifts = [mirror_error_budget(self.M, 1.0, t * DEG, 15e-6, 0.02)[0]
                  for t in np.linspace(0, 80, 33)]
        assert np.all(np.diff(shifts) > 0)


class TestModelValidation:
    def test_settle_points_must_increase(self):
        with pytest.raises(ValueError):
            MirrorModel(settle_points=((0.01, 0.002), (0.005, 0.012)))

    def test_positive_step(self):
        with pytest.raises(ValueError):
            MirrorModel(step_resolution=0.0)

    def test_controller_validation(self):
        with pytest.raises(ValueError):
            SteeringController(gain=0.0)
        with pytest.raises(ValueError):
            SteeringController(gain=1e-6, deadband=-1.0)

    def test_default_gain_cancels_one_pixel(self):
        fx, beam = 7200.0, 2.0
        gain = controller_gain(fx, beam)
        # one pixel of offset maps to one pixel of beam motion
        assert gain * fx * beam == pytest.approx(1.0)
