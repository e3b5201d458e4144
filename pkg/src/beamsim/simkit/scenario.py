"""Flat key-value scenario files.

Format: one `key = value` pair per line, `#` starts a comment, blank lines
ignored.  Every key must be in the documented schema (see docs/scenario.md);
unknown keys are errors, not warnings.  All units are SI except where the
key name says otherwise (_px, _deg, _hz).
"""

from __future__ import annotations

import math
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import ConfigInvalid
from ..geometry import CameraIntrinsics, FrameTag, RigidTransform, rotation_x, rotation_y, rotation_z
from ..optics import EyepieceModel, FourFSystem, TunableLens
from ..steering import MirrorModel, SteeringController, controller_gain
from .pipeline import PipelineConfig
from .world import (
    HeadsetModel,
    MotionScript,
    ProjectorModel,
    SceneModel,
    TrackingCamera,
    ViewpointCamera,
    default_marker_layout,
)

# key -> (type, default); None default means "derived from other keys"
SCENARIO_SCHEMA: dict[str, tuple[type, object]] = {
    "headset.x_m": (float, 0.0),
    "headset.y_m": (float, 0.0),
    "headset.z_m": (float, 1.0),
    "headset.yaw_deg": (float, 0.0),
    "headset.pitch_deg": (float, 0.0),
    "headset.roll_deg": (float, 0.0),
    "screen.width_m": (float, 0.030),
    "screen.height_m": (float, 0.020),
    "marker.size_m": (float, 0.010),
    "marker.margin_m": (float, 0.002),
    "motion.kind": (str, "static"),
    "motion.speed": (float, 0.0),
    "motion.extent": (float, 0.0),
    "projector.width_px": (int, 854),
    "projector.height_px": (int, 480),
    "projector.image_width_m": (float, 0.0384),
    "projector.image_height_m": (float, 0.0216),
    "projector.cone_deg": (float, 30.0),
    "optics.f1_m": (float, 0.045),
    "optics.f2_m": (float, 0.075),
    "optics.aperture_m": (float, 0.05),
    "lens.min_diopter": (float, -1.5),
    "lens.max_diopter": (float, 3.5),
    "lens.response_s": (float, 0.0025),
    "lens.default_focus_m": (float, 1.14),
    "mirror.step_rad": (float, 22e-6),
    "mirror.max_angle_deg": (float, 15.0),
    "mirror.beam_factor": (float, 2.0),
    "mirror.settle_small_deg": (float, 0.1),
    "mirror.settle_small_s": (float, 0.002),
    "mirror.settle_large_deg": (float, 20.0),
    "mirror.settle_large_s": (float, 0.012),
    "camera.width_px": (int, 1032),
    "camera.height_px": (int, 772),
    "camera.fx_px": (float, 7200.0),
    "camera.fy_px": (float, 7200.0),
    "camera.cx_px": (float, 516.0),
    "camera.cy_px": (float, 386.0),
    "camera.axial_offset_m": (float, 0.0),
    "camera.noise_sigma_px": (float, 0.0),
    "controller.deadband_px": (float, 2.0),
    "controller.gain_rad_per_px": (float, None),
    "viewpoint.fx_px": (float, 1400.0),
    "viewpoint.fy_px": (float, 1400.0),
    "viewpoint.width_px": (int, 1032),
    "viewpoint.height_px": (int, 772),
    "viewpoint.eye_offset_m": (float, 0.06),
    "pipeline.capture_hz": (float, 130.0),
    "pipeline.detect_hz": (float, 130.0),
    "pipeline.display_hz": (float, 100.0),
    "pipeline.capture_delay_s": (float, None),
    "pipeline.detect_delay_s": (float, None),
    "pipeline.display_delay_s": (float, None),
    "pipeline.seed": (int, 0),
    "run.duration_s": (float, 2.0),
}


def parse_scenario_text(text: str) -> dict:
    """Parse and validate scenario text into a fully defaulted key map."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in SCENARIO_SCHEMA:
            raise ConfigInvalid(f"unknown scenario key '{key}'")
        typ, _ = SCENARIO_SCHEMA[key]
        try:
            values[key] = typ(val) if typ is not str else val
        except ValueError:
            raise ConfigInvalid(
                f"key '{key}': cannot parse '{val}' as {typ.__name__}") from None
    out = {k: default for k, (_, default) in SCENARIO_SCHEMA.items()}
    out.update(values)
    return out


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package (e.g. 'static.scn')."""
    return Path(resources.files("beamsim") / "scenarios" / name)


def load_scenario(path) -> tuple[SceneModel, MotionScript, PipelineConfig, float]:
    """Read a scenario file (or bundled scenario name) and build the models."""
    p = Path(path)
    if not p.exists():
        candidate = bundled_scenario_path(p.name)
        if candidate.exists():
            p = candidate
        else:
            raise ConfigInvalid(f"scenario file not found: {path}")
    return build_scenario(parse_scenario_text(p.read_text()))


def build_scenario(cfg: dict) -> tuple[SceneModel, MotionScript, PipelineConfig, float]:
    mirror = MirrorModel(
        step_resolution=cfg["mirror.step_rad"],
        max_angle=math.radians(cfg["mirror.max_angle_deg"]),
        settle_points=(
            (math.radians(cfg["mirror.settle_small_deg"]),
             cfg["mirror.settle_small_s"]),
            (math.radians(cfg["mirror.settle_large_deg"]),
             cfg["mirror.settle_large_s"]),
        ),
        beam_deflection_factor=cfg["mirror.beam_factor"],
    )
    projector = ProjectorModel(
        resolution=(cfg["projector.width_px"], cfg["projector.height_px"]),
        cone_deg=cfg["projector.cone_deg"],
        image_size=(cfg["projector.image_width_m"],
                    cfg["projector.image_height_m"]),
        optics=FourFSystem(cfg["optics.f1_m"], cfg["optics.f2_m"],
                           cfg["optics.aperture_m"]),
        lens=TunableLens(cfg["lens.min_diopter"], cfg["lens.max_diopter"],
                         cfg["lens.response_s"]),
        mirror=mirror,
    )
    try:
        cam_intr = CameraIntrinsics(
            fx=cfg["camera.fx_px"], fy=cfg["camera.fy_px"],
            cx=cfg["camera.cx_px"], cy=cfg["camera.cy_px"],
            width=cfg["camera.width_px"], height=cfg["camera.height_px"])
        vp_intr = CameraIntrinsics(
            fx=cfg["viewpoint.fx_px"], fy=cfg["viewpoint.fy_px"],
            cx=cfg["viewpoint.width_px"] / 2.0,
            cy=cfg["viewpoint.height_px"] / 2.0,
            width=cfg["viewpoint.width_px"], height=cfg["viewpoint.height_px"])
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from None
    camera = TrackingCamera(
        intrinsics=cam_intr,
        frame_rate=cfg["pipeline.capture_hz"],
        axial_offset=cfg["camera.axial_offset_m"],
        noise_sigma=cfg["camera.noise_sigma_px"])

    screen = EyepieceModel(screen_w=cfg["screen.width_m"],
                           screen_h=cfg["screen.height_m"])
    markers = default_marker_layout(
        cfg["screen.width_m"], cfg["screen.height_m"],
        cfg["marker.size_m"], cfg["marker.margin_m"])
    start_rot = (rotation_y(math.radians(cfg["headset.yaw_deg"]))
                 @ rotation_x(math.radians(cfg["headset.pitch_deg"]))
                 @ rotation_z(math.radians(cfg["headset.roll_deg"])))
    start_pose = RigidTransform(
        start_rot,
        np.array([cfg["headset.x_m"], cfg["headset.y_m"], cfg["headset.z_m"]]),
        FrameTag.HEADSET, FrameTag.WORLD)
    headset = HeadsetModel(screen=screen, markers=markers, pose=start_pose)

    gain = cfg["controller.gain_rad_per_px"]
    if gain is None:
        gain = controller_gain(cam_intr.fx, mirror.beam_deflection_factor)
    try:
        controller = SteeringController(gain=gain,
                                        deadband=cfg["controller.deadband_px"])
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from None

    scene = SceneModel(
        projector=projector, camera=camera, headset=headset,
        controller=controller,
        viewpoint=ViewpointCamera(intrinsics=vp_intr,
                                  eye_offset=cfg["viewpoint.eye_offset_m"]),
        marker_size=cfg["marker.size_m"],
        default_focus=cfg["lens.default_focus_m"])
    motion = MotionScript(kind=cfg["motion.kind"], speed=cfg["motion.speed"],
                          extent=cfg["motion.extent"], start_pose=start_pose)
    pipeline = PipelineConfig(
        capture_rate=cfg["pipeline.capture_hz"],
        detect_rate=cfg["pipeline.detect_hz"],
        display_rate=cfg["pipeline.display_hz"],
        capture_delay=cfg["pipeline.capture_delay_s"],
        detect_delay=cfg["pipeline.detect_delay_s"],
        display_delay=cfg["pipeline.display_delay_s"],
        seed=cfg["pipeline.seed"])
    return scene, motion, pipeline, cfg["run.duration_s"]
