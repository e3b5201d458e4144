"""Structured-light calibration patterns: reflected-Gray stripe stacks and
their decoding into camera-to-projector correspondences."""

from __future__ import annotations

import math

import numpy as np

from ..errors import InsufficientCorrespondences
from ..geometry import CorrespondenceSet, Homography, apply_homography


def _bit_count(extent: int) -> int:
    if extent < 2:
        raise ValueError("pattern axis needs at least 2 pixels")
    return max(1, math.ceil(math.log2(extent)))


def pattern_pair_count(resolution: tuple[int, int]) -> int:
    """Number of (pattern, inverse) pairs for a projector resolution."""
    w, h = resolution
    return _bit_count(w) + _bit_count(h)


def graycode_generate(resolution: tuple[int, int]) -> list[np.ndarray]:
    """Binary stripe stack encoding projector pixel coordinates.

    Returns uint8 images (values 0/255) ordered column bits MSB..LSB then
    row bits MSB..LSB, each bit immediately followed by its inverse, so the
    stack holds 2 * pattern_pair_count(resolution) images.
    """
    w, h = resolution
    nx, ny = _bit_count(w), _bit_count(h)
    gx = np.arange(w, dtype=np.int64)
    gx ^= gx >> 1
    gy = np.arange(h, dtype=np.int64)
    gy ^= gy >> 1
    patterns = []
    for k in range(nx - 1, -1, -1):
        col = (((gx >> k) & 1) * 255).astype(np.uint8)
        img = np.tile(col, (h, 1))
        patterns.append(img)
        patterns.append(255 - img)
    for k in range(ny - 1, -1, -1):
        row = (((gy >> k) & 1) * 255).astype(np.uint8)
        img = np.tile(row[:, None], (1, w))
        patterns.append(img)
        patterns.append(255 - img)
    return patterns


def _gray_to_binary(g: np.ndarray) -> np.ndarray:
    b = g.copy()
    shift = 1
    while shift < 32:
        b ^= b >> shift
        shift <<= 1
    return b


def graycode_decode(observed: list[np.ndarray], resolution: tuple[int, int],
                    threshold: float = 8.0) -> CorrespondenceSet:
    """Decode per-camera-pixel projector coordinates from observed stacks.

    `observed` holds the camera's view of every generated image in stack
    order.  A pixel is kept only when every bit is unambiguous, i.e.
    |on - off| > threshold, and the decoded coordinate lands inside the
    projector raster.  Returns camera-pixel -> projector-pixel pairs.
    """
    w, h = resolution
    nx, ny = _bit_count(w), _bit_count(h)
    if len(observed) != 2 * (nx + ny):
        raise ValueError(
            f"stack length {len(observed)} does not match the "
            f"{2 * (nx + ny)} images generated for {w}x{h}")
    shape = observed[0].shape
    valid = np.ones(shape, dtype=bool)

    def decode_axis(images, nbits):
        code = np.zeros(shape, dtype=np.int64)
        for i in range(nbits):
            on = images[2 * i].astype(np.float64)
            off = images[2 * i + 1].astype(np.float64)
            diff = on - off
            np.logical_and(valid, np.abs(diff) > threshold, out=valid)
            code = (code << 1) | (diff > 0)
        return _gray_to_binary(code)

    x_code = decode_axis(observed[:2 * nx], nx)
    y_code = decode_axis(observed[2 * nx:], ny)
    valid &= (x_code < w) & (y_code < h)

    cam_y, cam_x = np.nonzero(valid)
    if len(cam_x) < 4:
        raise InsufficientCorrespondences(
            f"only {len(cam_x)} unambiguous pixels survived decoding")
    src = np.column_stack([cam_x, cam_y]).astype(np.float64)
    dst = np.column_stack([x_code[valid], y_code[valid]]).astype(np.float64)
    return CorrespondenceSet(src, dst)


def observe_patterns_through_homography(patterns: list[np.ndarray],
                                        h_cam_to_proj: Homography,
                                        cam_size: tuple[int, int]
                                        ) -> list[np.ndarray]:
    """Synthesize what a camera sees of each projected pattern.

    Each camera pixel looks at the projector pixel nearest to its image
    under the camera-to-projector map; camera pixels looking outside the
    raster read 0 in every image (and decode as ambiguous).
    """
    cw, ch = cam_size
    ph, pw = patterns[0].shape
    gx, gy = np.meshgrid(np.arange(cw, dtype=float),
                         np.arange(ch, dtype=float))
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    mapped = apply_homography(h_cam_to_proj, pts)
    px = np.rint(mapped[:, 0]).astype(np.int64)
    py = np.rint(mapped[:, 1]).astype(np.int64)
    inside = (px >= 0) & (px < pw) & (py >= 0) & (py < ph)
    px_c = np.clip(px, 0, pw - 1)
    py_c = np.clip(py, 0, ph - 1)
    out = []
    for pat in patterns:
        img = np.where(inside, pat[py_c, px_c], 0).astype(np.uint8)
        out.append(img.reshape(ch, cw))
    return out
