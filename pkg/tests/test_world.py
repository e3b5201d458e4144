import math

import numpy as np
import pytest

from beamsim.errors import ConfigInvalid, NoMarkersVisible
from beamsim.geometry import FrameTag, RigidTransform, rotation_y
from beamsim.simkit import (
    HeadsetModel,
    MotionScript,
    TrackingCamera,
    compute_screen_offset,
    default_marker_layout,
    estimate_throw,
    observe_markers,
)
from beamsim.steering import MirrorState
from conftest import pinhole_project

FX = FY = 7200.0
CX, CY = 516.0, 386.0


def headset_at(x=0.0, y=0.0, z=1.0, rot=None):
    rot = np.eye(3) if rot is None else rot
    pose = RigidTransform(rot, np.array([x, y, z]),
                          FrameTag.HEADSET, FrameTag.WORLD)
    return HeadsetModel(pose=pose)


class TestObserveMarkers:
    def test_matches_pinhole_oracle(self):
        headset = headset_at(z=1.0)
        rng = np.random.default_rng(0)
        seen = observe_markers(TrackingCamera(), headset, MirrorState(),
                               0.0, rng)
        assert [mid for mid, _ in seen] == [0, 1, 2, 3]
        for mid, px in seen:
            cam_pts = headset.markers[mid] + np.array([0.0, 0.0, 1.0])
            assert np.allclose(px, pinhole_project(cam_pts, FX, FY, CX, CY),
                               atol=1e-9)

    def test_out_of_frame_dropped(self):
        # camera half FoV is ~71.7 mm at 1 m; 0.2 m displacement is far out
        rng = np.random.default_rng(0)
        seen = observe_markers(TrackingCamera(), headset_at(x=0.2),
                               MirrorState(), 0.0, rng)
        assert seen == []

    def test_partial_marker_dropped(self):
        # displace so only the left markers stay inside the frame
        rng = np.random.default_rng(0)
        seen = observe_markers(TrackingCamera(), headset_at(x=0.06),
                               MirrorState(), 0.0, rng)
        assert set(mid for mid, _ in seen) == {0, 3}

    def test_noise_statistics(self):
        cam = TrackingCamera(noise_sigma=0.2)
        headset = headset_at()
        rng = np.random.default_rng(42)
        clean = observe_markers(TrackingCamera(), headset, MirrorState(),
                                0.0, rng)[0][1]
        draws = np.array([observe_markers(cam, headset, MirrorState(),
                                          0.0, rng)[0][1]
                          for _ in range(1000)])
        std = (draws - clean).std(axis=0)
        assert np.all(np.abs(std - 0.2) < 0.02)

    def test_mirror_steering_shifts_view(self):
        # steering by theta moves the beam by beam_factor * theta, so the
        # on-axis headset appears displaced the opposite way
        rng = np.random.default_rng(0)
        theta = 1e-3
        seen = observe_markers(TrackingCamera(), headset_at(),
                               MirrorState(theta=theta, phi=0.0), 0.0, rng,
                               beam_factor=2.0)
        shifted = seen[0][1]
        base = observe_markers(TrackingCamera(), headset_at(),
                               MirrorState(), 0.0, rng)[0][1]
        dx = (shifted - base)[:, 0].mean()
        assert dx == pytest.approx(-FX * math.tan(2 * theta), rel=1e-3)

    def test_deterministic_given_seed(self):
        cam = TrackingCamera(noise_sigma=0.5)
        a = observe_markers(cam, headset_at(), MirrorState(), 0.0,
                            np.random.default_rng(9))
        b = observe_markers(cam, headset_at(), MirrorState(), 0.0,
                            np.random.default_rng(9))
        for (ia, pa), (ib, pb) in zip(a, b):
            assert ia == ib and np.array_equal(pa, pb)


class TestScreenOffset:
    def test_centered_screen(self):
        headset = headset_at()
        rng = np.random.default_rng(0)
        seen = observe_markers(TrackingCamera(), headset, MirrorState(),
                               0.0, rng)
        dx, dy = compute_screen_offset(seen, headset.markers, (CX, CY))
        assert abs(dx) < 1e-9 and abs(dy) < 1e-9

    def test_fifty_pixel_offset(self):
        # 50 px at fx = 7200 and z = 1 m is 50/7200 m of lateral shift
        headset = headset_at(x=50.0 / FX)
        rng = np.random.default_rng(0)
        seen = observe_markers(TrackingCamera(), headset, MirrorState(),
                               0.0, rng)
        dx, dy = compute_screen_offset(seen, headset.markers, (CX, CY))
        assert dx == pytest.approx(50.0, abs=1.0)
        assert dy == pytest.approx(0.0, abs=1e-6)

    def test_single_marker_sufficient(self):
        headset = headset_at(x=0.01, y=-0.004)
        rng = np.random.default_rng(0)
        seen = observe_markers(TrackingCamera(), headset, MirrorState(),
                               0.0, rng)
        full = compute_screen_offset(seen, headset.markers, (CX, CY))
        only_one = compute_screen_offset(seen[:1], headset.markers, (CX, CY))
        assert only_one == pytest.approx(full, abs=2.0)

    def test_no_markers_raises(self):
        with pytest.raises(NoMarkersVisible):
            compute_screen_offset([], default_marker_layout(), (CX, CY))


class TestEstimateThrow:
    def synthetic_centered_marker(self, z, size=0.01):
        half = size / 2.0
        corners = np.array([[-half, -half, z], [half, -half, z],
                            [half, half, z], [-half, half, z]])
        return [(0, pinhole_project(corners, FX, FY, CX, CY))]

    def test_frontoparallel_exact(self):
        markers = self.synthetic_centered_marker(1.0)
        assert estimate_throw(markers, TrackingCamera(), 0.01) == \
            pytest.approx(1.0, abs=1e-6)

    def test_axial_offset_added(self):
        markers = self.synthetic_centered_marker(1.0)
        cam = TrackingCamera(axial_offset=0.1)
        assert estimate_throw(markers, cam, 0.01) == pytest.approx(1.1,
                                                                   abs=1e-6)

    def test_noisy_median_error(self):
        # farthest refocus distance of the depth sweep, sigma 0.2 px,
        # full marker constellation
        errors = []
        headset = headset_at(z=1.27)
        cam = TrackingCamera(noise_sigma=0.2)
        for seed in range(100):
            rng = np.random.default_rng(5000 + seed)
            seen = observe_markers(cam, headset, MirrorState(), 0.0, rng)
            est = estimate_throw(seen, cam, 0.01, layout=headset.markers)
            errors.append(abs(est - 1.27) / 1.27)
        assert np.median(errors) <= 0.02

    def test_layout_mode_matches_single_marker_noiseless(self):
        headset = headset_at(z=1.0)
        rng = np.random.default_rng(0)
        seen = observe_markers(TrackingCamera(), headset, MirrorState(),
                               0.0, rng)
        joint = estimate_throw(seen, TrackingCamera(), 0.01,
                               layout=headset.markers)
        assert joint == pytest.approx(1.0, abs=1e-9)

    def test_no_markers_raises(self):
        with pytest.raises(NoMarkersVisible):
            estimate_throw([], TrackingCamera(), 0.01)


class TestHeadsetModel:
    def test_default_markers_clear_active_area(self):
        HeadsetModel()  # does not raise

    def test_overlapping_marker_rejected(self):
        bad = (np.array([[-0.005, -0.005, 0], [0.005, -0.005, 0],
                         [0.005, 0.005, 0], [-0.005, 0.005, 0.0]]),)
        with pytest.raises(ConfigInvalid):
            HeadsetModel(markers=bad)

    def test_layout_outside_active_rect(self):
        for m in default_marker_layout():
            assert np.all((np.abs(m[:, 0]) >= 0.015) | (np.abs(m[:, 1]) >= 0.010))


class TestMotionScript:
    def test_static(self):
        m = MotionScript()
        assert m.displacement_at(3.7) == 0.0

    def test_triangle_wave(self):
        m = MotionScript(kind="slide_x", speed=0.1, extent=0.3)
        assert m.displacement_at(0.0) == 0.0
        assert m.displacement_at(3.0) == pytest.approx(0.3)   # reaches +extent
        assert m.displacement_at(6.0) == pytest.approx(0.0)   # back through 0
        assert m.displacement_at(9.0) == pytest.approx(-0.3)  # -extent
        assert m.displacement_at(12.0) == pytest.approx(0.0)  # full period

    def test_slide_moves_position(self):
        m = MotionScript(kind="slide_x", speed=0.1, extent=0.3)
        pose = m.pose_at(1.0)
        assert pose.translation == pytest.approx([0.1, 0.0, 1.0])

    def test_yaw_rotates_about_headset_y(self):
        m = MotionScript(kind="yaw", speed=20.0, extent=20.0)
        pose = m.pose_at(0.5)  # 10 degrees
        assert np.allclose(pose.rotation, rotation_y(math.radians(10.0)))
        assert pose.translation == pytest.approx([0.0, 0.0, 1.0])

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigInvalid):
            MotionScript(kind="wobble")

    def test_negative_speed_rejected(self):
        with pytest.raises(ConfigInvalid):
            MotionScript(kind="yaw", speed=-1.0, extent=5.0)
