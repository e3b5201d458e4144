"""Scene description: steering projector, co-axial tracking camera, and a
passive marker-equipped headset, plus the measurement operations the
tracking loop runs on camera observations.

World layout: the steering pivot sits at the world origin.  With the
mirror at rest the projection / viewing axis is world +z.  The headset
frame is oriented like the camera frame (x right, y down, z away from the
projector), origin at the screen center, so a headset facing the
projector head-on at distance d has pose rotation = identity and
translation = (0, 0, d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigInvalid, NoMarkersVisible
from ..geometry import (
    CameraIntrinsics,
    CorrespondenceSet,
    FrameTag,
    RigidTransform,
    apply_homography,
    estimate_homography,
    planar_pose_from_homography,
    rotation_x,
    rotation_y,
    rotation_z,
)
from ..optics import DEFAULT_EYEPIECE, DEFAULT_TUNABLE_LENS, EyepieceModel, FourFSystem, TunableLens
from ..steering import MirrorModel, MirrorState, SteeringController, controller_gain

DEFAULT_CAMERA_INTRINSICS = CameraIntrinsics(
    fx=7200.0, fy=7200.0, cx=516.0, cy=386.0, width=1032, height=772)
DEFAULT_VIEWPOINT_INTRINSICS = CameraIntrinsics(
    fx=1400.0, fy=1400.0, cx=516.0, cy=386.0, width=1032, height=772)


@dataclass(frozen=True)
class ProjectorModel:
    """Projector raster, steered scan cone, relay optics and focus lens.

    image_size is the physical footprint of the full raster on the screen
    plane; the relay keeps it roughly constant over the working throws.
    """

    resolution: tuple[int, int] = (854, 480)
    cone_deg: float = 30.0
    image_size: tuple[float, float] = (0.0384, 0.0216)
    optics: FourFSystem = field(
        default_factory=lambda: FourFSystem(0.045, 0.075, 0.05))
    lens: TunableLens = field(default_factory=TunableLens)
    mirror: MirrorModel = field(default_factory=MirrorModel)

    def __post_init__(self):
        if min(self.resolution) <= 0:
            raise ConfigInvalid("projector resolution must be positive")
        if min(self.image_size) <= 0:
            raise ConfigInvalid("projected image size must be positive")
        optical_half = math.degrees(
            self.mirror.beam_deflection_factor * self.mirror.max_angle)
        if self.cone_deg / 2.0 > optical_half + 1e-9:
            raise ConfigInvalid("projection cone exceeds the mirror range")


@dataclass(frozen=True)
class TrackingCamera:
    """Camera sharing the projection path through the steering mirror.

    axial_offset is the extra optical path from the focus lens to the
    steering pivot; it is added to camera-measured distances when the
    focus command is formed.
    """

    intrinsics: CameraIntrinsics = DEFAULT_CAMERA_INTRINSICS
    frame_rate: float = 130.0
    axial_offset: float = 0.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.frame_rate <= 0:
            raise ConfigInvalid("camera frame rate must be positive")
        if self.noise_sigma < 0:
            raise ConfigInvalid("noise sigma must be nonnegative")


def default_marker_layout(screen_w: float = 0.030, screen_h: float = 0.020,
                          marker_size: float = 0.010,
                          margin: float = 0.002) -> tuple[np.ndarray, ...]:
    """Four square markers just outside the corners of the active area.

    Corner order inside each marker: (-,-), (+,-), (+,+), (-,+) in the
    marker's own axes, i.e. counter-clockwise on a y-down screen.
    """
    half = marker_size / 2.0
    cx = screen_w / 2.0 + margin + half
    cy = screen_h / 2.0 + margin + half
    local = np.array([[-half, -half, 0.0], [half, -half, 0.0],
                      [half, half, 0.0], [-half, half, 0.0]])
    markers = []
    for sx, sy in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
        center = np.array([sx * cx, sy * cy, 0.0])
        markers.append(local + center)
    return tuple(markers)


@dataclass(frozen=True)
class HeadsetModel:
    """Passive headset: eyepiece screen, tracking markers, world pose."""

    screen: EyepieceModel = DEFAULT_EYEPIECE
    markers: tuple[np.ndarray, ...] = field(default_factory=default_marker_layout)
    pose: RigidTransform = field(default_factory=lambda: RigidTransform(
        np.eye(3), np.array([0.0, 0.0, 1.0]),
        FrameTag.HEADSET, FrameTag.WORLD))

    def __post_init__(self):
        half_w = self.screen.screen_w / 2.0
        half_h = self.screen.screen_h / 2.0
        markers = tuple(np.asarray(m, dtype=float).reshape(4, 3)
                        for m in self.markers)
        for m in markers:
            inside = (np.abs(m[:, 0]) < half_w) & (np.abs(m[:, 1]) < half_h)
            if np.any(inside):
                raise ConfigInvalid("marker overlaps the active screen area")
        object.__setattr__(self, "markers", markers)

    def marker_local_corners(self, marker_size: float) -> np.ndarray:
        half = marker_size / 2.0
        return np.array([[-half, -half], [half, -half],
                         [half, half], [-half, half]])


@dataclass(frozen=True)
class MotionScript:
    """Scripted headset motion: triangle-wave sweep of one axis.

    speed is m/s for slides, deg/s for rotations; the displacement ramps
    from 0 up to +extent, back through 0 to -extent and repeats.  Rotations
    pivot about the headset origin (the screen center).
    """

    kind: str = "static"
    speed: float = 0.0
    extent: float = 0.0
    start_pose: RigidTransform = field(default_factory=lambda: RigidTransform(
        np.eye(3), np.array([0.0, 0.0, 1.0]),
        FrameTag.HEADSET, FrameTag.WORLD))

    KINDS = ("static", "slide_x", "depth_z", "yaw", "pitch", "roll")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigInvalid(f"unknown motion kind '{self.kind}'")
        if self.speed < 0 or self.extent < 0:
            raise ConfigInvalid("motion speed and extent must be nonnegative")

    def displacement_at(self, t: float) -> float:
        """Triangle wave in [-extent, +extent], units of the motion kind."""
        if self.kind == "static" or self.speed == 0.0 or self.extent == 0.0:
            return 0.0
        u = math.fmod(self.speed * t, 4.0 * self.extent)
        if u <= self.extent:
            return u
        if u <= 3.0 * self.extent:
            return 2.0 * self.extent - u
        return u - 4.0 * self.extent

    def pose_at(self, t: float) -> RigidTransform:
        d = self.displacement_at(t)
        rot = self.start_pose.rotation
        trans = self.start_pose.translation.copy()
        if self.kind == "slide_x":
            trans = trans + np.array([d, 0.0, 0.0])
        elif self.kind == "depth_z":
            trans = trans + np.array([0.0, 0.0, d])
        elif self.kind == "yaw":
            rot = rot @ rotation_y(math.radians(d))
        elif self.kind == "pitch":
            rot = rot @ rotation_x(math.radians(d))
        elif self.kind == "roll":
            rot = rot @ rotation_z(math.radians(d))
        return RigidTransform(rot, trans, FrameTag.HEADSET, FrameTag.WORLD)


@dataclass(frozen=True)
class ViewpointCamera:
    """User-perspective pinhole camera rigidly mounted behind the screen.

    It sits eye_offset meters behind the screen center (headset +z) and
    looks back through the screen toward the projector.
    """

    intrinsics: CameraIntrinsics = DEFAULT_VIEWPOINT_INTRINSICS
    eye_offset: float = 0.06


@dataclass(frozen=True)
class SceneModel:
    """Everything the closed-loop simulation needs, minus the schedule."""

    projector: ProjectorModel = field(default_factory=ProjectorModel)
    camera: TrackingCamera = field(default_factory=TrackingCamera)
    headset: HeadsetModel = field(default_factory=HeadsetModel)
    controller: SteeringController | None = None
    viewpoint: ViewpointCamera = field(default_factory=ViewpointCamera)
    marker_size: float = 0.010
    default_focus: float = 1.14  # lens focus distance before tracking locks

    def __post_init__(self):
        if self.controller is None:
            gain = controller_gain(self.camera.intrinsics.fx,
                                   self.projector.mirror.beam_deflection_factor)
            object.__setattr__(self, "controller", SteeringController(gain=gain))


def default_scene(throw: float = 1.0, noise_sigma: float = 0.0,
                  **camera_kwargs) -> SceneModel:
    """Scene with the default hardware and a head-on headset at `throw`."""
    pose = RigidTransform(np.eye(3), np.array([0.0, 0.0, throw]),
                          FrameTag.HEADSET, FrameTag.WORLD)
    return SceneModel(
        camera=TrackingCamera(noise_sigma=noise_sigma, **camera_kwargs),
        headset=HeadsetModel(pose=pose))


def steer_rotation(theta_optical: float, phi_optical: float) -> np.ndarray:
    """World rotation of the steered axis for optical angles (theta, phi).

    Positive theta turns the axis toward world +x, positive phi toward
    world +y (image down).
    """
    return rotation_y(theta_optical) @ rotation_x(-phi_optical)


def mirror_view_rotation(mirror: MirrorState, beam_factor: float) -> np.ndarray:
    return steer_rotation(beam_factor * mirror.theta, beam_factor * mirror.phi)


def observe_markers(cam: TrackingCamera, headset: HeadsetModel,
                    mirror: MirrorState, t: float, rng,
                    beam_factor: float = 2.0) -> list[tuple[int, np.ndarray]]:
    """Project the headset markers into the mirror-steered camera.

    Returns (marker_id, 4x2 pixel corners) for every marker that lands
    fully inside the frame; markers clipped by the frame edge are dropped.
    Gaussian pixel noise of cam.noise_sigma is added to visible corners.
    The time argument only documents when the sample was taken; callers
    supply the headset pose already evaluated at that time.
    """
    k = cam.intrinsics
    r_view = mirror_view_rotation(mirror, beam_factor)
    out = []
    for marker_id, corners in enumerate(headset.markers):
        world = headset.pose.apply(corners)
        local = world @ r_view  # == r_view.T applied to each row
        if np.any(local[:, 2] <= 1e-9):
            continue
        px = np.column_stack([
            k.fx * local[:, 0] / local[:, 2] + k.cx,
            k.fy * local[:, 1] / local[:, 2] + k.cy,
        ])
        if (px[:, 0] < 0).any() or (px[:, 0] >= k.width).any() \
                or (px[:, 1] < 0).any() or (px[:, 1] >= k.height).any():
            continue
        if cam.noise_sigma > 0:
            px = px + rng.normal(0.0, cam.noise_sigma, size=px.shape)
        out.append((marker_id, px))
    return out


def compute_screen_offset(markers: list[tuple[int, np.ndarray]],
                          layout: tuple[np.ndarray, ...],
                          projection_center: tuple[float, float]
                          ) -> tuple[float, float]:
    """Pixel offset from the projection center to the screen center.

    Fits the screen-to-camera homography from the visible markers' known
    screen-frame corners, maps the screen origin through it, and subtracts
    the projection center (static in the camera image because camera and
    projector share the steered path).
    """
    center = screen_center_pixel(markers, layout)
    return (float(center[0] - projection_center[0]),
            float(center[1] - projection_center[1]))


def screen_center_pixel(markers: list[tuple[int, np.ndarray]],
                        layout: tuple[np.ndarray, ...]) -> np.ndarray:
    if not markers:
        raise NoMarkersVisible("no markers to compute the screen center from")
    src = np.concatenate([layout[mid][:, :2] for mid, _ in markers])
    dst = np.concatenate([px for _, px in markers])
    h = estimate_homography(CorrespondenceSet(src, dst),
                            FrameTag.SCREEN, FrameTag.CAMERA)
    return apply_homography(h, np.array([0.0, 0.0]))


def estimate_throw(markers: list[tuple[int, np.ndarray]], cam: TrackingCamera,
                   marker_size: float, layout=None) -> float:
    """Projector-side distance to the screen from the markers' planar pose.

    Returns the camera-frame depth of the marker plane plus the camera's
    axial offset, i.e. the distance the focus lens must work at.  When the
    screen-frame `layout` is given, all visible markers' corners enter the
    pose jointly (the wide constellation conditions the depth far better
    than a single small square); otherwise the first marker's local
    `marker_size` square is used on its own.
    """
    if not markers:
        raise NoMarkersVisible("no markers to estimate the throw from")
    if layout is not None:
        src = np.concatenate([layout[mid][:, :2] for mid, _ in markers])
        dst = np.concatenate([px for _, px in markers])
    else:
        half = marker_size / 2.0
        src = np.array([[-half, -half], [half, -half],
                        [half, half], [-half, half]])
        dst = markers[0][1]
    h = estimate_homography(CorrespondenceSet(src, dst),
                            FrameTag.SCREEN, FrameTag.CAMERA)
    pose = planar_pose_from_homography(h, cam.intrinsics)
    return float(pose.translation[2]) + cam.axial_offset
