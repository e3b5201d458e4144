"""Grayscale raster operations: homography warping, slanted-edge test
patterns, Gaussian blur, and slanted-edge MTF analysis.

The MTF path follows the standard slanted-edge recipe: locate the edge
crossing per row by the centroid of the row derivative, fit the edge line
by least squares, project every pixel onto the edge normal, bin the values
at 4x oversampling into an edge spread function, differentiate to the line
spread function, window, and take the Fourier magnitude normalized at DC.
The finite-difference derivative response is divided out, which is the
usual correction at these oversampling rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AngleOutOfRange,
    DegenerateHomography,
    NoEdgeFound,
    NoHalfContrastCrossing,
    ProfileTooShort,
)
from .geometry import Homography

OVERSAMPLE = 4


@dataclass(frozen=True)
class GrayImage:
    """Grayscale raster on the 8-bit intensity scale [0, 255].

    Samples are stored as float64 so analysis keeps sub-level precision;
    values are quantized to uint8 only at PGM I/O.
    """

    width: int
    height: int
    samples: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.samples, dtype=np.float64).reshape(
            self.height, self.width)
        a.flags.writeable = False
        object.__setattr__(self, "samples", a)

    @classmethod
    def from_array(cls, a) -> "GrayImage":
        a = np.asarray(a, dtype=np.float64)
        return cls(a.shape[1], a.shape[0], a)

    def crop(self, x: int, y: int, w: int, h: int) -> "GrayImage":
        if x < 0 or y < 0 or x + w > self.width or y + h > self.height:
            raise ValueError("crop window outside the image")
        return GrayImage.from_array(self.samples[y:y + h, x:x + w])


@dataclass(frozen=True)
class EdgeProfile:
    """Oversampled edge spread function along the edge normal (pixels)."""

    positions: np.ndarray
    esf: np.ndarray
    oversample: int = OVERSAMPLE

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        esf = np.asarray(self.esf, dtype=float)
        if len(pos) != len(esf):
            raise ValueError("positions and esf lengths differ")
        if np.any(np.diff(pos) <= 0):
            raise ValueError("positions must be strictly increasing")
        pos.flags.writeable = False
        esf.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "esf", esf)


@dataclass(frozen=True)
class MTFCurve:
    """Contrast response vs spatial frequency (cycles per original pixel)."""

    frequencies: np.ndarray
    response: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        r = np.asarray(self.response, dtype=float)
        f.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "response", r)


def warp_image(src: GrayImage, h: Homography,
               out_size: tuple[int, int]) -> GrayImage:
    """Warp by inverse mapping: each output pixel samples src at H^-1.

    `h` maps source pixel coordinates to destination pixel coordinates.
    Bilinear interpolation; samples falling outside the source read 0.
    """
    try:
        hinv = np.linalg.inv(h.h)
    except np.linalg.LinAlgError:
        raise DegenerateHomography("homography is not invertible") from None
    ow, oh = out_size
    xs, ys = np.meshgrid(np.arange(ow, dtype=float),
                         np.arange(oh, dtype=float))
    ones = np.ones_like(xs)
    denom = hinv[2, 0] * xs + hinv[2, 1] * ys + hinv[2, 2] * ones
    with np.errstate(divide="ignore", invalid="ignore"):
        sx = (hinv[0, 0] * xs + hinv[0, 1] * ys + hinv[0, 2]) / denom
        sy = (hinv[1, 0] * xs + hinv[1, 1] * ys + hinv[1, 2]) / denom
    bad = ~np.isfinite(sx) | ~np.isfinite(sy)
    sx = np.where(bad, -1.0, sx)
    sy = np.where(bad, -1.0, sy)

    x0 = np.floor(sx).astype(int)
    y0 = np.floor(sy).astype(int)
    fx = sx - x0
    fy = sy - y0

    def sample(ix, iy):
        inside = (ix >= 0) & (ix < src.width) & (iy >= 0) & (iy < src.height)
        v = src.samples[np.clip(iy, 0, src.height - 1),
                        np.clip(ix, 0, src.width - 1)]
        return np.where(inside, v, 0.0)

    out = ((1 - fx) * (1 - fy) * sample(x0, y0)
           + fx * (1 - fy) * sample(x0 + 1, y0)
           + (1 - fx) * fy * sample(x0, y0 + 1)
           + fx * fy * sample(x0 + 1, y0 + 1))
    return GrayImage.from_array(out)


def slanted_edge_pattern(size: tuple[int, int], angle_deg: float,
                         low: float = 0.0, high: float = 255.0) -> GrayImage:
    """Dark-to-bright edge through the image center, slanted off vertical.

    The slant must be 2..10 degrees for the oversampling to work; each
    pixel is area-sampled on a 4x4 subgrid so the edge lands sub-pixel.
    Pixels right of the edge read `high`.
    """
    if not 2.0 <= abs(angle_deg) <= 10.0:
        raise AngleOutOfRange("edge slant must satisfy 2 <= |angle| <= 10 deg")
    w, h = size
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    slope = math.tan(math.radians(angle_deg))
    sub = (np.arange(OVERSAMPLE) + 0.5) / OVERSAMPLE - 0.5
    xs = np.arange(w, dtype=float)[None, :, None] + sub[None, None, :]
    acc = np.zeros((h, w))
    for row in range(h):
        for dy in sub:
            y = row + dy
            edge_x = cx + slope * (y - cy)
            acc[row] += (xs[0, :, :] > edge_x).sum(axis=1)
    frac = acc / (OVERSAMPLE * OVERSAMPLE)
    return GrayImage.from_array(low + (high - low) * frac)


def gaussian_blur(src: GrayImage, sigma: float) -> GrayImage:
    """Separable Gaussian blur, kernel radius ceil(4 sigma), edge replication."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return GrayImage.from_array(src.samples)
    radius = int(math.ceil(4.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=float)
    kernel = np.exp(-x * x / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    padded = np.pad(src.samples, ((0, 0), (radius, radius)), mode="edge")
    rows = np.apply_along_axis(lambda r: np.convolve(r, kernel, "valid"),
                               1, padded)
    padded = np.pad(rows, ((radius, radius), (0, 0)), mode="edge")
    out = np.apply_along_axis(lambda c: np.convolve(c, kernel, "valid"),
                              0, padded)
    return GrayImage.from_array(out)


def esf_from_roi(roi: GrayImage) -> EdgeProfile:
    """Extract the oversampled edge spread function from a slanted-edge ROI.

    Raises NoEdgeFound when the derivative energy is too small (no edge)
    or the per-row edge positions do not fit a line within 2 px RMS.
    """
    img = roi.samples
    grad = np.gradient(img, axis=1)
    if np.max(np.abs(grad)) < 4.0:
        raise NoEdgeFound("derivative energy below threshold")

    rows = []
    centroids = []
    for y in range(roi.height):
        g = np.abs(grad[y])
        peak = int(np.argmax(g))
        lo = max(0, peak - 4)
        hi = min(roi.width, peak + 5)
        mass = g[lo:hi].sum()
        if mass <= 1e-12:
            continue
        rows.append(y)
        centroids.append(float((np.arange(lo, hi) * g[lo:hi]).sum() / mass))
    if len(rows) < 2:
        raise NoEdgeFound("too few rows with an edge crossing")

    rows = np.asarray(rows, dtype=float)
    centroids = np.asarray(centroids)
    slope, intercept = np.polyfit(rows, centroids, 1)
    residual = centroids - (slope * rows + intercept)
    if math.sqrt(float(np.mean(residual ** 2))) > 2.0:
        raise NoEdgeFound("edge positions are not collinear within 2 px")

    ys, xs = np.mgrid[0:roi.height, 0:roi.width]
    dist = (xs - (slope * ys + intercept)) / math.sqrt(1.0 + slope * slope)
    dist = dist.ravel()
    values = img.ravel()

    bin_w = 1.0 / OVERSAMPLE
    start = np.min(dist)
    idx = np.floor((dist - start) / bin_w).astype(int)
    nbins = int(idx.max()) + 1
    sums = np.bincount(idx, weights=values, minlength=nbins)
    counts = np.bincount(idx, minlength=nbins)
    filled = counts > 0
    esf = np.empty(nbins)
    centers = start + (np.arange(nbins) + 0.5) * bin_w
    esf[filled] = sums[filled] / counts[filled]
    if not filled.all():
        esf[~filled] = np.interp(centers[~filled], centers[filled],
                                 esf[filled])
    return EdgeProfile(centers, esf, OVERSAMPLE)


def mtf_from_esf(p: EdgeProfile) -> MTFCurve:
    """Differentiate, window, and Fourier-transform the ESF into an MTF.

    The line spread function is Hann-windowed about its peak to suppress
    far-from-edge noise, the spectrum is normalized at DC, and frequencies
    are reported up to the original-pixel Nyquist (0.5 cy/px).
    """
    esf = p.esf
    if len(esf) < 32:
        raise ProfileTooShort("need at least 32 oversampled bins")
    spacing = 1.0 / p.oversample
    lsf = np.diff(esf) / spacing
    n = len(lsf)
    peak = int(np.argmax(np.abs(lsf)))
    half_width = max(peak, n - 1 - peak, 1)
    i = np.arange(n)
    win = 0.5 * (1.0 + np.cos(np.pi * (i - peak) / half_width))
    win = np.where(np.abs(i - peak) <= half_width, win, 0.0)

    nfft = 1 << max(10, (4 * n - 1).bit_length())
    spectrum = np.abs(np.fft.rfft(lsf * win, n=nfft))
    if spectrum[0] <= 0:
        raise NoEdgeFound("windowed line spread has no DC component")
    freqs = np.fft.rfftfreq(nfft, d=spacing)
    response = spectrum / spectrum[0]

    # divide out the response of the finite-difference derivative
    arg = np.pi * freqs * spacing
    deriv = np.where(arg > 0, np.sin(np.maximum(arg, 1e-30)) /
                     np.maximum(arg, 1e-30), 1.0)
    response = response / deriv

    keep = freqs <= 0.5 + 1e-12
    return MTFCurve(freqs[keep], response[keep])


def half_contrast_frequency(curve: MTFCurve) -> float:
    """First downward 0.5 crossing of the response, cycles per pixel."""
    r = curve.response
    f = curve.frequencies
    for i in range(1, len(r)):
        if r[i - 1] >= 0.5 > r[i]:
            frac = (r[i - 1] - 0.5) / (r[i - 1] - r[i])
            return float(f[i - 1] + frac * (f[i] - f[i - 1]))
    raise NoHalfContrastCrossing("response never falls through 0.5")


def mtf50(curve: MTFCurve, pitch_deg_per_px: float) -> float:
    """Half-contrast frequency converted to cycles per degree."""
    if pitch_deg_per_px <= 0:
        raise ValueError("pitch must be positive")
    return half_contrast_frequency(curve) / pitch_deg_per_px


def write_pgm(img: GrayImage, path) -> None:
    """Binary PGM (P5, maxval 255); samples are rounded and clipped."""
    data = np.clip(np.rint(img.samples), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.width} {img.height}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> GrayImage:
    """Read a binary PGM (P5, maxval <= 255)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError("not a binary PGM (P5) file")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval > 255:
        raise ValueError("only 8-bit PGM is supported")
    raw = np.frombuffer(data, dtype=np.uint8, count=width * height,
                        offset=pos)
    return GrayImage.from_array(raw.reshape(height, width).astype(np.float64))
