"""Figure rendering for the CLI report paths.

Every renderer takes the already-computed rows/curves and writes one PNG
next to the delimited output.  Nothing here feeds back into the numeric
results; figures are a convenience view of the same data.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_rayleigh_grid(rows, path):
    """Heatmap of spot size (um) over throw distance x aperture."""
    ds = sorted({r[0] for r in rows})
    apertures = sorted({r[1] for r in rows})
    grid = np.full((len(apertures), len(ds)), np.nan)
    for d, ap, _lam, spot in rows:
        grid[apertures.index(ap), ds.index(d)] = spot * 1e6
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(grid, origin="lower", aspect="auto",
                   extent=(min(ds), max(ds), min(apertures), max(apertures)))
    fig.colorbar(im, ax=ax, label="spot size (um)")
    ax.set_xlabel("throw distance (m)")
    ax.set_ylabel("aperture (m)")
    ax.set_title("Diffraction-limited spot size")
    return _finish(fig, path)


def plot_shift_curves(rows, path):
    """Beam-center shift vs steering error, one curve per base angle."""
    fig, ax = plt.subplots(figsize=(6, 4))
    thetas = sorted({r[1] for r in rows})
    for theta in thetas:
        pts = [(r[2], r[3]) for r in rows if r[1] == theta]
        pts.sort()
        ax.plot([p[0] for p in pts], [1e3 * p[1] for p in pts],
                marker="o", label=f"base angle {theta:g} deg")
    ax.set_xlabel("steering error (deg)")
    ax.set_ylabel("image shift (mm)")
    ax.set_title("Pointing error amplification")
    ax.legend()
    return _finish(fig, path)


def plot_settle_curve(rows, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([r[0] for r in rows], [1e3 * r[1] for r in rows], marker=".")
    ax.set_xlabel("step size (deg)")
    ax.set_ylabel("settle time (ms)")
    ax.set_title("Mirror settling time")
    return _finish(fig, path)


def plot_fov_curve(rows, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([r[0] for r in rows], [r[1] for r in rows], marker="o",
            label="horizontal")
    ax.plot([r[0] for r in rows], [r[2] for r in rows], marker="s",
            label="vertical")
    ax.set_xlabel("throw distance (m)")
    ax.set_ylabel("monocular FoV (deg)")
    ax.set_title("Eyepiece field of view vs throw")
    ax.legend()
    return _finish(fig, path)


def plot_trace(samples, path):
    """Displayed-center trajectory in viewpoint pixels, plus latency."""
    ts = [s.t for s in samples if s.center_px is not None]
    cx = [s.center_px[0] for s in samples if s.center_px is not None]
    cy = [s.center_px[1] for s in samples if s.center_px is not None]
    lat = [(s.t, 1e3 * s.latency) for s in samples if s.latency is not None]
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    axes[0].plot(ts, cx, label="center x")
    axes[0].plot(ts, cy, label="center y")
    axes[0].set_ylabel("viewpoint pixels")
    axes[0].set_title("Displayed-center trajectory")
    axes[0].legend()
    if lat:
        axes[1].plot([p[0] for p in lat], [p[1] for p in lat], ".")
    axes[1].set_xlabel("time (s)")
    axes[1].set_ylabel("latency (ms)")
    return _finish(fig, path)


def plot_mtf(profile, curve, f50, path):
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    axes[0].plot(profile.positions, profile.esf)
    axes[0].set_xlabel("distance along edge normal (px)")
    axes[0].set_ylabel("intensity")
    axes[0].set_title("Edge spread function")
    axes[1].plot(curve.frequencies, curve.response)
    axes[1].axhline(0.5, linestyle="--", linewidth=0.8)
    if f50 is not None:
        axes[1].axvline(f50, linestyle="--", linewidth=0.8)
    axes[1].set_xlabel("frequency (cy/px)")
    axes[1].set_ylabel("contrast")
    axes[1].set_title("MTF")
    return _finish(fig, path)
