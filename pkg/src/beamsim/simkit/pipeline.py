"""Deterministic discrete-event simulation of the three-stage tracking loop.

Stages run periodically: capture samples the markers through the steered
camera, detect turns the newest unprocessed capture into a usable
measurement after its processing delay, and the steer/display stage
consumes the newest ready measurement, updates mirror / focus / warp, and
emits a displayed frame.  Frames appear one display delay after the tick;
the trace records where the displayed content center lands as seen from a
camera rigidly attached to the headset.

Queueing discipline: every stage is latest-wins (stale upstream results
are dropped), and a steering command is only issued from a measurement
captured after the previous command took effect, so in-flight stale
measurements never re-fire the mirror.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..errors import ConfigInvalid, EmptyTrace
from ..optics import focus_power_for_throw
from ..steering import MirrorState, steer_update
from .world import (
    SceneModel,
    MotionScript,
    compute_screen_offset,
    estimate_throw,
    mirror_view_rotation,
    observe_markers,
)

_TIME_EPS = 1e-9
_STAGE_RANK = {"capture": 0, "detect": 1, "display": 2}

CSV_HEADER = ("t_s,stage,center_x_px,center_y_px,dx_px,dy_px,"
              "theta_rad,phi_rad,lens_diopter,markers_visible,latency_s")


@dataclass(frozen=True)
class PipelineConfig:
    """Stage rates (Hz), per-stage processing delays (s, default one
    period each), per-stage phase offsets (s), and the RNG seed."""

    capture_rate: float = 130.0
    detect_rate: float = 130.0
    display_rate: float = 100.0
    capture_delay: float | None = None
    detect_delay: float | None = None
    display_delay: float | None = None
    capture_phase: float = 0.0
    detect_phase: float = 0.0
    display_phase: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("capture_rate", "detect_rate", "display_rate"):
            if getattr(self, name) <= 0:
                raise ConfigInvalid(f"{name} must be positive")
        for stage in ("capture", "detect", "display"):
            delay = getattr(self, f"{stage}_delay")
            if delay is None:
                delay = 1.0 / getattr(self, f"{stage}_rate")
            elif delay < 0:
                raise ConfigInvalid(f"{stage}_delay must be nonnegative")
            object.__setattr__(self, f"{stage}_delay", float(delay))


@dataclass(frozen=True)
class Toggles:
    warp_on: bool = True
    steer_on: bool = True
    refocus_on: bool = True


@dataclass(frozen=True)
class TraceEvent:
    t: float
    stage: str
    markers_visible: bool | None = None


@dataclass(frozen=True)
class TraceSample:
    """One displayed frame: where its center landed and what drove it."""

    t: float
    center_px: tuple[float, float] | None
    offset_px: tuple[float, float] | None
    theta: float
    phi: float
    lens_diopter: float
    markers_visible: bool
    latency: float | None
    est_throw: float | None
    capture_t: float | None


@dataclass(frozen=True)
class PipelineTrace:
    events: tuple[TraceEvent, ...]
    samples: tuple[TraceSample, ...]
    duration: float
    seed: int


@dataclass
class _Record:
    capture_t: float
    ready_at: float
    markers: list


def _ticks(rate: float, phase: float, duration: float) -> list[float]:
    out = []
    k = 0
    while True:
        t = phase + k / rate
        if t >= duration:
            return out
        out.append(t)
        k += 1


def _pixel_direction(px, intr) -> np.ndarray:
    return np.array([(px[0] - intr.cx) / intr.fx,
                     (px[1] - intr.cy) / intr.fy, 1.0])


def run_scenario(scene: SceneModel, motion: MotionScript,
                 pipeline: PipelineConfig, duration: float,
                 toggles: Toggles = Toggles()) -> PipelineTrace:
    """Run the closed tracking loop for `duration` simulated seconds.

    Fully deterministic for a given (scene, motion, pipeline) tuple; the
    only randomness is the camera pixel noise drawn from the seeded
    generator in capture order.
    """
    if duration <= 0:
        raise ConfigInvalid("duration must be positive")

    rng = np.random.default_rng(pipeline.seed)
    cam = scene.camera
    intr = cam.intrinsics
    mirror_model = scene.projector.mirror
    beam = mirror_model.beam_deflection_factor
    principal = np.array([intr.cx, intr.cy])
    layout = scene.headset.markers

    schedule = [(t, 0) for t in _ticks(pipeline.capture_rate,
                                       pipeline.capture_phase, duration)]
    schedule += [(t, 1) for t in _ticks(pipeline.detect_rate,
                                        pipeline.detect_phase, duration)]
    schedule += [(t, 2) for t in _ticks(pipeline.display_rate,
                                        pipeline.display_phase, duration)]
    schedule.sort(key=lambda e: e)

    mirror = MirrorState()
    warp_px = principal.copy()          # camera pixel the content center aims at
    lens_power = focus_power_for_throw(scene.default_focus, 0.0,
                                       scene.projector.lens).power
    est_throw_m: float | None = None
    last_command_t = -math.inf

    pending_caps: list[_Record] = []
    pending_dets: list[_Record] = []
    last_detected_cap = -math.inf

    events: list[TraceEvent] = []
    samples: list[TraceSample] = []

    for t, stage in schedule:
        if stage == 0:
            pose = motion.pose_at(t)
            headset = replace(scene.headset, pose=pose)
            markers = observe_markers(cam, headset, mirror, t, rng, beam)
            pending_caps.append(_Record(t, t + pipeline.capture_delay, markers))
            events.append(TraceEvent(t, "capture", bool(markers)))

        elif stage == 1:
            ready = [c for c in pending_caps
                     if c.ready_at <= t + _TIME_EPS
                     and c.capture_t > last_detected_cap]
            if ready:
                newest = max(ready, key=lambda c: c.capture_t)
                last_detected_cap = newest.capture_t
                pending_caps = [c for c in pending_caps
                                if c.capture_t > newest.capture_t]
                pending_dets.append(_Record(newest.capture_t,
                                            t + pipeline.detect_delay,
                                            newest.markers))
                events.append(TraceEvent(t, "detect", bool(newest.markers)))
            else:
                events.append(TraceEvent(t, "detect", None))

        else:
            ready = [d for d in pending_dets if d.ready_at <= t + _TIME_EPS]
            det = max(ready, key=lambda d: d.capture_t) if ready else None
            if det is not None:
                pending_dets = [d for d in pending_dets
                                if d.capture_t >= det.capture_t]

            t_photon = t + pipeline.display_delay
            pose_photon = motion.pose_at(t_photon)
            offset = None
            latency = None
            visible = False

            if det is not None:
                latency = t_photon - det.capture_t
                visible = bool(det.markers)
                if visible:
                    offset = compute_screen_offset(det.markers, layout,
                                                   (principal[0], principal[1]))
                    if toggles.refocus_on:
                        est_throw_m = estimate_throw(det.markers, cam,
                                                     scene.marker_size,
                                                     layout=layout)
                        lens_power = focus_power_for_throw(
                            est_throw_m, 0.0, scene.projector.lens).power
                    warp_px = principal + np.array(offset) if toggles.warp_on \
                        else principal.copy()
                    if toggles.steer_on \
                            and det.capture_t > last_command_t + _TIME_EPS:
                        mirror, commanded = steer_update(
                            scene.controller, mirror_model, mirror, offset, t)
                        if commanded:
                            last_command_t = t

            center = _displayed_center(scene, mirror, beam, warp_px,
                                       pose_photon)
            samples.append(TraceSample(
                t=t_photon, center_px=center, offset_px=offset,
                theta=mirror.theta, phi=mirror.phi, lens_diopter=lens_power,
                markers_visible=visible, latency=latency,
                est_throw=est_throw_m if (visible and toggles.refocus_on) else None,
                capture_t=det.capture_t if det is not None else None))
            events.append(TraceEvent(t_photon, "display", visible))

    order = sorted(range(len(events)),
                   key=lambda i: (events[i].t, _STAGE_RANK[events[i].stage], i))
    return PipelineTrace(tuple(events[i] for i in order), tuple(samples),
                         duration, pipeline.seed)


def _displayed_center(scene: SceneModel, mirror: MirrorState, beam: float,
                      warp_px: np.ndarray,
                      pose) -> tuple[float, float] | None:
    """Where the displayed content center lands, in viewpoint pixels.

    The warp target is a camera pixel; co-axial optics make it an angular
    offset from the steered axis, clamped to the projector raster footprint
    on the screen plane.  The landing point is re-projected into the
    viewpoint camera riding on the headset.
    """
    intr = scene.camera.intrinsics
    r_view = mirror_view_rotation(mirror, beam)
    normal = pose.rotation @ np.array([0.0, 0.0, 1.0])
    s0 = pose.translation

    axis = r_view @ np.array([0.0, 0.0, 1.0])
    denom_axis = float(normal @ axis)
    v = _pixel_direction(warp_px, intr)
    if abs(denom_axis) > 1e-9:
        axis_range = float(normal @ s0) / denom_axis
        if axis_range > 0:
            half_w, half_h = (s / 2.0 for s in scene.projector.image_size)
            ax = math.atan(v[0])
            ay = math.atan(v[1])
            ax = min(max(ax, -math.atan(half_w / axis_range)),
                     math.atan(half_w / axis_range))
            ay = min(max(ay, -math.atan(half_h / axis_range)),
                     math.atan(half_h / axis_range))
            v = np.array([math.tan(ax), math.tan(ay), 1.0])

    d = r_view @ (v / np.linalg.norm(v))
    denom = float(normal @ d)
    if abs(denom) < 1e-9:
        return None
    t_hit = float(normal @ s0) / denom
    if t_hit <= 0:
        return None
    landing = t_hit * d

    vp = scene.viewpoint
    eye = pose.translation + pose.rotation @ np.array([0.0, 0.0, vp.eye_offset])
    # the viewpoint camera looks back along headset -z
    flip = np.diag([-1.0, 1.0, -1.0])
    r_vp = pose.rotation @ flip
    local = r_vp.T @ (landing - eye)
    if local[2] <= 1e-9:
        return None
    k = vp.intrinsics
    return (float(k.fx * local[0] / local[2] + k.cx),
            float(k.fy * local[1] / local[2] + k.cy))


def _fmt(value) -> str:
    if value is None:
        return ""
    return "%.12g" % value


def _fmt_bool(value) -> str:
    if value is None:
        return ""
    return "true" if value else "false"


def trace_to_csv(trace: PipelineTrace) -> str:
    """Serialize a trace: one row per event, display rows carry the sample."""
    lines = [CSV_HEADER]
    by_time: dict[float, TraceSample] = {s.t: s for s in trace.samples}
    for ev in trace.events:
        if ev.stage == "display":
            s = by_time[ev.t]
            cx, cy = (s.center_px if s.center_px is not None
                      else (None, None))
            dx, dy = (s.offset_px if s.offset_px is not None
                      else (None, None))
            lines.append(",".join([
                _fmt(s.t), "display", _fmt(cx), _fmt(cy), _fmt(dx), _fmt(dy),
                _fmt(s.theta), _fmt(s.phi), _fmt(s.lens_diopter),
                _fmt_bool(s.markers_visible), _fmt(s.latency)]))
        else:
            lines.append(",".join([
                _fmt(ev.t), ev.stage, "", "", "", "", "", "", "",
                _fmt_bool(ev.markers_visible), ""]))
    return "\n".join(lines) + "\n"


def trajectory_stats(trace: PipelineTrace) -> dict:
    """Per-axis summary of the displayed-center trajectory and latency."""
    centers = np.array([s.center_px for s in trace.samples
                        if s.center_px is not None])
    if len(centers) < 2:
        raise EmptyTrace("need at least 2 displayed samples for statistics")
    offsets = np.array([s.offset_px for s in trace.samples
                        if s.offset_px is not None])
    latencies = np.array([s.latency for s in trace.samples
                          if s.latency is not None])
    mean_center = centers.mean(axis=0)
    dev = centers - mean_center
    stats = {
        "n_samples": int(len(centers)),
        "mean_center_px": tuple(float(v) for v in mean_center),
        "rms_jitter_px": tuple(float(v) for v in
                               np.sqrt(np.mean(dev * dev, axis=0))),
        "max_excursion_px": tuple(float(v) for v in
                                  np.max(np.abs(dev), axis=0)),
        "mean_offset_px": (tuple(float(v) for v in offsets.mean(axis=0))
                           if len(offsets) else (math.nan, math.nan)),
        "mean_latency_s": (float(latencies.mean()) if len(latencies)
                           else math.nan),
    }
    return stats
