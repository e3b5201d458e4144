import numpy as np


def random_rotation(rng, max_deg: float) -> np.ndarray:
    """Uniform random axis, angle uniform in [0, max_deg]."""
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    angle = np.radians(rng.uniform(0.0, max_deg))
    kx = np.array([[0, -axis[2], axis[1]],
                   [axis[2], 0, -axis[0]],
                   [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * kx + (1 - np.cos(angle)) * (kx @ kx)


def rotation_angle_between(r1: np.ndarray, r2: np.ndarray) -> float:
    """Geodesic angle between two rotations, radians."""
    tr = np.trace(r1 @ r2.T)
    return float(np.arccos(np.clip((tr - 1.0) / 2.0, -1.0, 1.0)))


def pinhole_project(points_cam: np.ndarray, fx, fy, cx, cy) -> np.ndarray:
    """Plain pinhole projection of camera-frame points, written out directly
    so tests do not share code with the implementation under test."""
    p = np.atleast_2d(points_cam)
    return np.column_stack([fx * p[:, 0] / p[:, 2] + cx,
                            fy * p[:, 1] / p[:, 2] + cy])


def mild_random_homography(rng, translation_scale=100.0) -> np.ndarray:
    """Well-conditioned random projective map over a ~1000 px domain."""
    m = np.eye(3)
    m[:2, :2] += 0.2 * rng.standard_normal((2, 2))
    m[:2, 2] = translation_scale * rng.standard_normal(2)
    m[2, :2] = 1e-4 * rng.standard_normal(2)
    return m
