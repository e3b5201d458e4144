"""Analytic projection-optics models: two-lens relay, diffraction spot,
focus-tunable lens, and the eyepiece field of view."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import NonPositiveDistance, NonPositiveInput


@dataclass(frozen=True)
class FourFSystem:
    """Two-lens relay: focal lengths f1, f2 and the second lens aperture."""

    f1: float
    f2: float
    aperture_d: float
    inverts_image: bool = True  # relay forms an inverted copy of the object

    def __post_init__(self):
        if min(self.f1, self.f2, self.aperture_d) <= 0:
            raise NonPositiveInput("4F parameters must be positive")


@dataclass(frozen=True)
class TunableLens:
    """Focus-tunable lens: optical power range in diopters."""

    min_power: float = -1.5
    max_power: float = 3.5
    response_time: float = 0.0025

    def __post_init__(self):
        if self.min_power >= self.max_power:
            raise ValueError("min_power must be below max_power")


@dataclass(frozen=True)
class Wavelength:
    meters: float = 550e-9

    def __post_init__(self):
        if not 380e-9 <= self.meters <= 780e-9:
            raise ValueError("wavelength outside the visible band")


@dataclass(frozen=True)
class EyepieceModel:
    """Diffuser screen dimensions plus a measured FoV-vs-throw table.

    The table holds (throw_m, fov_h_deg, fov_v_deg) rows with strictly
    increasing throw; FoV between rows is linearly interpolated.
    """

    screen_w: float = 0.030
    screen_h: float = 0.020
    fov_table: Sequence[tuple[float, float, float]] = (
        (0.5, 24.0, 17.0),
        (2.0, 36.0, 24.0),
    )

    def __post_init__(self):
        if self.screen_w <= 0 or self.screen_h <= 0:
            raise ValueError("screen dimensions must be positive")
        rows = tuple(tuple(float(v) for v in row) for row in self.fov_table)
        if len(rows) < 2:
            raise ValueError("fov_table needs at least 2 rows")
        throws = [r[0] for r in rows]
        if any(b <= a for a, b in zip(throws, throws[1:])):
            raise ValueError("fov_table throws must be strictly increasing")
        for _, fh, fv in rows:
            if not (0.0 < fh < 180.0 and 0.0 < fv < 180.0):
                raise ValueError("fov values must lie strictly in (0, 180)")
        object.__setattr__(self, "fov_table", rows)


DEFAULT_TUNABLE_LENS = TunableLens()
DEFAULT_EYEPIECE = EyepieceModel()


def rayleigh_spot(d_image: float, lam, aperture_d: float) -> float:
    """Diffraction-limited spot size 1.22 * d * lambda / D, meters."""
    lam_m = lam.meters if isinstance(lam, Wavelength) else float(lam)
    if d_image <= 0 or lam_m <= 0 or aperture_d <= 0:
        raise NonPositiveInput("spot size needs positive d, lambda, D")
    return 1.22 * d_image * lam_m / aperture_d


def lens_separation(f1: float, f2: float) -> float:
    """Relay lens spacing: the sum of the two focal lengths."""
    if f1 <= 0 or f2 <= 0:
        raise NonPositiveInput("focal lengths must be positive")
    return f1 + f2


def magnification(f1: float, f2: float) -> float:
    """Unsigned lateral magnification f2 / f1 of the relay.

    The relay inverts the image; that is carried as the
    FourFSystem.inverts_image flag rather than a negative sign here.
    """
    if f1 <= 0 or f2 <= 0:
        raise NonPositiveInput("focal lengths must be positive")
    return f2 / f1


class FocusCommand(NamedTuple):
    power: float       # diopters actually commanded
    clamped: bool      # True when the request fell outside the lens range


def focus_power_for_throw(throw: float, axial_offset: float,
                          lens: TunableLens = DEFAULT_TUNABLE_LENS) -> FocusCommand:
    """Lens power focusing at throw + axial_offset, clamped to the lens range.

    axial_offset is the extra optical path between the tunable lens and the
    steering pivot the throw was measured from.
    """
    distance = throw + axial_offset
    if distance <= 0:
        raise NonPositiveDistance("focus distance must be positive")
    requested = 1.0 / distance
    power = min(max(requested, lens.min_power), lens.max_power)
    return FocusCommand(power, power != requested)


def fov_at_throw(e: EyepieceModel, throw: float) -> tuple[float, float]:
    """Monocular FoV (horizontal, vertical) in degrees at the given throw.

    Linear interpolation over the measured table, clamped to the end rows
    outside the measured range.
    """
    if throw <= 0:
        raise NonPositiveInput("throw must be positive")
    throws = np.array([r[0] for r in e.fov_table])
    fh = np.array([r[1] for r in e.fov_table])
    fv = np.array([r[2] for r in e.fov_table])
    return (float(np.interp(throw, throws, fh)),
            float(np.interp(throw, throws, fv)))


def angular_pixel_pitch(fov_deg: float, pixels_across: int) -> float:
    """Degrees subtended per pixel across the given field of view."""
    if fov_deg <= 0 or pixels_across <= 0:
        raise NonPositiveInput("fov and pixel count must be positive")
    return fov_deg / pixels_across
