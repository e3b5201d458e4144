"""Two-axis steering mirror model and the offset-driven pointing controller.

Angle bookkeeping: MirrorState.theta / .phi are the mechanical mirror
angles.  The reflected beam (and the co-axial camera view) turns by
beam_deflection_factor times the mechanical angle, so the scan cone per
axis is beam_deflection_factor * max_angle wide on each side.  Positive
theta steers the beam toward image +x (right), positive phi toward image
+y (down).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import OutOfRange, TangentSingularity

_HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class MirrorModel:
    """Stepper-quantized two-axis mirror with size-dependent settling.

    settle_points are (step_rad, settle_s) knots; settling time between
    knots is linearly interpolated, (0, 0) is implicit, and steps beyond
    the last knot settle in the last knot's time.
    """

    step_resolution: float = 22e-6
    max_angle: float = math.radians(15.0)
    settle_points: Sequence[tuple[float, float]] = (
        (math.radians(0.1), 0.002),
        (math.radians(20.0), 0.012),
    )
    beam_deflection_factor: float = 2.0

    def __post_init__(self):
        if self.step_resolution <= 0:
            raise ValueError("step_resolution must be positive")
        if self.beam_deflection_factor <= 0:
            raise ValueError("beam_deflection_factor must be positive")
        knots = tuple((float(s), float(t)) for s, t in self.settle_points)
        if not knots:
            raise ValueError("settle_points must not be empty")
        steps = [s for s, _ in knots]
        if steps[0] <= 0 or any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError("settle steps must be positive and increasing")
        object.__setattr__(self, "settle_points", knots)

    def angle_bound(self) -> float:
        """Largest representable multiple of the step inside max_angle."""
        return math.floor(self.max_angle / self.step_resolution + 1e-9) \
            * self.step_resolution


@dataclass(frozen=True)
class MirrorState:
    theta: float = 0.0
    phi: float = 0.0
    busy_until: float = 0.0  # simulation clock at which the move has settled


@dataclass(frozen=True)
class SteeringController:
    """Maps a camera offset (pixels) to a mirror increment (radians).

    No command is issued while the offset magnitude stays within the
    deadband; the residual is absorbed by image warping.
    """

    gain: float
    deadband: float = 2.0

    def __post_init__(self):
        if self.gain <= 0:
            raise ValueError("gain must be positive")
        if self.deadband < 0:
            raise ValueError("deadband must be nonnegative")


def controller_gain(fx_px: float, beam_deflection_factor: float = 2.0) -> float:
    """Mechanical radians per observed pixel so one command cancels one pixel.

    One camera pixel subtends ~1/fx radians; the beam moves by the
    deflection factor times the mechanical step.
    """
    return 1.0 / (fx_px * beam_deflection_factor)


def image_shift_exact(z: float, theta: float, dtheta: float) -> float:
    """On-screen shift of the beam center: z * (tan(theta+dtheta) - tan(theta))."""
    _check_tangent(theta)
    _check_tangent(theta + dtheta)
    return z * (math.tan(theta + dtheta) - math.tan(theta))


def image_shift_approx(z: float, theta: float, dtheta: float) -> float:
    """First-order shift z * dtheta / cos^2(theta), valid for small dtheta."""
    _check_tangent(theta)
    _check_tangent(theta + dtheta)
    c = math.cos(theta)
    return z * dtheta / (c * c)


def _check_tangent(angle: float):
    if abs(angle) >= _HALF_PI - 1e-9 or abs(math.cos(angle)) < 1e-12:
        raise TangentSingularity(f"angle {angle:.6f} rad too close to +-90 deg")


def settle_time(m: MirrorModel, step: float) -> float:
    """Dead time after commanding a step of the given size (radians)."""
    if step < 0:
        step = -step
    knots = ((0.0, 0.0),) + tuple(m.settle_points)
    for (s0, t0), (s1, t1) in zip(knots, knots[1:]):
        if step <= s1:
            return t0 + (t1 - t0) * (step - s0) / (s1 - s0)
    return knots[-1][1]


def _quantize_steps(angle: float, step: float) -> float:
    """Nearest multiple of step; exact half-step ties round away from zero."""
    n = abs(angle) / step
    lo = math.floor(n)
    frac = n - lo
    if frac > 0.5 - 1e-9:
        lo += 1  # covers both frac > 0.5 and the tie
    if lo == 0:
        return 0.0
    return math.copysign(lo * step, angle)


def quantize_angle(m: MirrorModel, angle: float) -> float:
    """Snap an angle to the mirror's step grid (ties away from zero)."""
    if abs(angle) > m.max_angle + 1e-12:
        raise OutOfRange(f"angle {angle:.6g} exceeds +-{m.max_angle:.6g} rad")
    q = _quantize_steps(angle, m.step_resolution)
    bound = m.angle_bound()
    return min(max(q, -bound), bound)


def steer_update(c: SteeringController, m: MirrorModel, state: MirrorState,
                 offset_px: tuple[float, float],
                 now: float) -> tuple[MirrorState, bool]:
    """One controller iteration against an observed offset.

    Returns (state, commanded).  Nothing happens while the offset is inside
    the deadband or the mirror is still settling; otherwise the offset is
    converted through the gain, snapped to the step grid, clamped to the
    mechanical range, and the mirror is locked out for the settle time of
    the larger axis step.
    """
    dx, dy = offset_px
    if math.hypot(dx, dy) <= c.deadband or now < state.busy_until:
        return state, False
    step = m.step_resolution
    bound_steps = round(m.angle_bound() / step)
    new_t = round((state.theta + _quantize_steps(c.gain * dx, step)) / step)
    new_p = round((state.phi + _quantize_steps(c.gain * dy, step)) / step)
    new_t = min(max(new_t, -bound_steps), bound_steps) * step
    new_p = min(max(new_p, -bound_steps), bound_steps) * step
    applied = max(abs(new_t - state.theta), abs(new_p - state.phi))
    new_state = MirrorState(new_t, new_p, now + settle_time(m, applied))
    return new_state, True


def mirror_error_budget(m: MirrorModel, z: float, theta: float,
                        repeatability: float,
                        image_height: float) -> tuple[float, float]:
    """Image shift caused by mirror repeatability, and its height fraction.

    The mechanical repeatability is multiplied by the beam deflection
    factor before entering the tangent shift model.  Note that vendor
    datasheets often quote the raw small-angle product z * repeatability,
    which omits both the deflection factor and the 1/cos^2 amplification
    at oblique projection angles and can therefore read an order of
    magnitude smaller than this geometric value.
    """
    if repeatability == 0.0:
        return 0.0, 0.0
    shift = image_shift_exact(z, theta, m.beam_deflection_factor * repeatability)
    return shift, shift / image_height
