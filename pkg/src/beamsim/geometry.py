"""Coordinate frames, rigid transforms, and plane-to-plane projective maps.

Conventions used everywhere in this package:

* right-handed frames, camera looks down +z, image x right, image y down
* rotations are 3x3 orthonormal matrices, translations are meters
* pixels appear only at camera / projector boundaries
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BehindCamera,
    DegenerateConfiguration,
    FrameMismatch,
    PointAtInfinity,
)

_ORTHO_TOL = 1e-9


class FrameTag(enum.Enum):
    WORLD = "world"
    PROJECTOR = "projector"
    CAMERA = "camera"
    SCREEN = "screen"
    HEADSET = "headset"
    MIRROR = "mirror"


def rotation_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class RigidTransform:
    """SE(3) map taking points in `from_frame` to points in `to_frame`."""

    rotation: np.ndarray
    translation: np.ndarray
    from_frame: FrameTag = FrameTag.WORLD
    to_frame: FrameTag = FrameTag.WORLD

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if np.max(np.abs(r @ r.T - np.eye(3))) > _ORTHO_TOL:
            raise ValueError("rotation is not orthonormal within 1e-9")
        if abs(np.linalg.det(r) - 1.0) > _ORTHO_TOL:
            raise ValueError("rotation determinant is not +1 within 1e-9")
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    def apply(self, point) -> np.ndarray:
        """Map a 3-vector (or Nx3 array) from from_frame into to_frame."""
        p = np.asarray(point, dtype=float)
        return p @ self.rotation.T + self.translation


def identity_transform(frame: FrameTag = FrameTag.WORLD) -> RigidTransform:
    return RigidTransform(np.eye(3), np.zeros(3), frame, frame)


def make_transform(rotation, translation, from_frame=FrameTag.WORLD,
                   to_frame=FrameTag.WORLD) -> RigidTransform:
    return RigidTransform(np.asarray(rotation, float),
                          np.asarray(translation, float),
                          from_frame, to_frame)


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Chain two transforms: the result maps a.from_frame into b.to_frame."""
    if a.to_frame != b.from_frame:
        raise FrameMismatch(
            f"cannot compose {a.from_frame.value}->{a.to_frame.value} "
            f"with {b.from_frame.value}->{b.to_frame.value}")
    rotation = b.rotation @ a.rotation
    translation = b.rotation @ a.translation + b.translation
    return RigidTransform(rotation, translation, a.from_frame, b.to_frame)


def invert(t: RigidTransform) -> RigidTransform:
    rotation = t.rotation.T
    translation = -rotation @ t.translation
    return RigidTransform(rotation, translation, t.to_frame, t.from_frame)


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics, pixels; principal point inside the sensor."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point outside the sensor")

    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class Homography:
    """3x3 projective plane map, scale-normalized.

    Normalization divides by the largest-magnitude entry, so that entry
    becomes exactly +1 and two homographies equal up to projective scale
    compare equal entrywise.
    """

    h: np.ndarray
    from_frame: FrameTag | None = None
    to_frame: FrameTag | None = None

    def __post_init__(self):
        m = np.asarray(self.h, dtype=float).reshape(3, 3)
        pivot = m.flat[np.argmax(np.abs(m))]
        if pivot == 0.0:
            raise DegenerateConfiguration("zero homography")
        m = m / pivot
        sv = np.linalg.svd(m, compute_uv=False)
        if sv[-1] < 1e-13 * sv[0]:
            raise DegenerateConfiguration("homography is singular")
        m.flags.writeable = False
        object.__setattr__(self, "h", m)


def identity_homography(from_frame=None, to_frame=None) -> Homography:
    return Homography(np.eye(3), from_frame, to_frame)


def apply_homography(h: Homography, point) -> np.ndarray:
    """Map a 2D point (or Nx2 array) through the homography."""
    p = np.atleast_2d(np.asarray(point, dtype=float))
    q = np.column_stack([p, np.ones(len(p))]) @ h.h.T
    w = q[:, 2]
    if np.any(np.abs(w) < 1e-12):
        raise PointAtInfinity("mapped point has a vanishing third coordinate")
    out = q[:, :2] / w[:, None]
    return out[0] if np.asarray(point).ndim == 1 else out


@dataclass(frozen=True)
class CorrespondenceSet:
    """Paired 2D points (source -> target) for homography estimation."""

    src: np.ndarray
    dst: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.src, dtype=float).reshape(-1, 2)
        d = np.asarray(self.dst, dtype=float).reshape(-1, 2)
        if len(s) != len(d):
            raise ValueError("source and target counts differ")
        if len(s) < 4:
            raise ValueError("need at least 4 correspondences")
        if len(s) == 4 and _has_collinear_triple(s):
            raise DegenerateConfiguration(
                "3 of 4 source points are collinear")
        s.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "src", s)
        object.__setattr__(self, "dst", d)

    def __len__(self):
        return len(self.src)


def _has_collinear_triple(pts: np.ndarray) -> bool:
    n = len(pts)
    scale = max(np.ptp(pts), 1.0)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                a, b, c = pts[i], pts[j], pts[k]
                area2 = abs((b[0] - a[0]) * (c[1] - a[1])
                            - (b[1] - a[1]) * (c[0] - a[0]))
                if area2 < 1e-12 * scale * scale:
                    return True
    return False


def _isotropic_normalization(pts: np.ndarray) -> np.ndarray:
    """Similarity taking the centroid to the origin, mean radius to sqrt(2)."""
    centroid = pts.mean(axis=0)
    mean_dist = np.mean(np.linalg.norm(pts - centroid, axis=1))
    if mean_dist < 1e-15:
        raise DegenerateConfiguration("all points coincide")
    s = np.sqrt(2.0) / mean_dist
    return np.array([[s, 0.0, -s * centroid[0]],
                     [0.0, s, -s * centroid[1]],
                     [0.0, 0.0, 1.0]])


def estimate_homography(c: CorrespondenceSet, from_frame=None,
                        to_frame=None) -> Homography:
    """Estimate the homography mapping c.src onto c.dst (normalized DLT).

    Both point sets are isotropically normalized, the 2Nx9 design matrix is
    solved for its null space, and the result is denormalized.  Raises
    DegenerateConfiguration when the design matrix is rank deficient
    (collinear or coincident points).
    """
    t_src = _isotropic_normalization(c.src)
    t_dst = _isotropic_normalization(c.dst)
    n = len(c)
    sh = np.column_stack([c.src, np.ones(n)]) @ t_src.T
    dh = np.column_stack([c.dst, np.ones(n)]) @ t_dst.T

    a = np.zeros((2 * n, 9))
    a[0::2, 0:3] = sh
    a[0::2, 6:9] = -dh[:, 0:1] * sh
    a[1::2, 3:6] = sh
    a[1::2, 6:9] = -dh[:, 1:2] * sh

    if n <= 4096:
        if a.shape[0] < 9:  # keep the null-space vector in the economy SVD
            a = np.vstack([a, np.zeros((9 - a.shape[0], 9))])
        _, sv, vt = np.linalg.svd(a, full_matrices=False)
        if sv[-2] < 1e-10 * sv[0]:
            raise DegenerateConfiguration("design matrix is rank deficient")
        h = vt[-1].reshape(3, 3)
    else:
        # big correspondence sets (structured-light decodes): 9x9 normal
        # equations are orders of magnitude cheaper than the tall SVD
        w, v = np.linalg.eigh(a.T @ a)
        if w[1] < 1e-20 * max(w[-1], 1.0):
            raise DegenerateConfiguration("design matrix is rank deficient")
        h = v[:, 0].reshape(3, 3)

    h = np.linalg.inv(t_dst) @ h @ t_src
    return Homography(h, from_frame, to_frame)


def planar_pose_from_homography(h: Homography, k: CameraIntrinsics,
                                plane_scale: float = 1.0) -> RigidTransform:
    """Recover the camera-from-plane pose from a plane-to-pixel homography.

    `h` maps plane coordinates (z = 0, units of `plane_scale` meters) to
    camera pixels.  The first two columns of K^-1 H give the plane axes in
    camera coordinates; their average norm fixes the scale, the third
    column scaled the same way is the translation, and the rotation is
    snapped to the nearest orthonormal matrix via SVD.  The sign is chosen
    so the plane sits in front of the camera (translation z > 0).
    """
    hm = h.h @ np.diag([1.0 / plane_scale, 1.0 / plane_scale, 1.0])
    m = np.linalg.inv(k.matrix()) @ hm
    scale = 2.0 / (np.linalg.norm(m[:, 0]) + np.linalg.norm(m[:, 1]))
    m = m * scale
    if abs(m[2, 2]) < 1e-12:
        raise BehindCamera("plane passes through the camera center")
    if m[2, 2] < 0:
        m = -m
    r1, r2, t = m[:, 0], m[:, 1], m[:, 2]
    r_approx = np.column_stack([r1, r2, np.cross(r1, r2)])
    u, _, vt = np.linalg.svd(r_approx)
    rot = u @ vt
    if np.linalg.det(rot) < 0:
        rot = u @ np.diag([1.0, 1.0, -1.0]) @ vt
    return RigidTransform(rot, t, FrameTag.SCREEN, FrameTag.CAMERA)
