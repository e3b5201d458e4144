"""Command-line surface: design calculators, closed-loop simulation,
structured-light calibration demo, and slanted-edge MTF analysis.

Exit codes: 0 success, 2 configuration or input error, 3 tracking lost for
an entire simulation run, 4 image analysis failure.  All outputs are
deterministic for a given --seed; CSV artifacts are written whole or not
at all.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import imaging, optics, steering
from .errors import (
    BeamSimError,
    ConfigInvalid,
    NoEdgeFound,
    NoHalfContrastCrossing,
    NonPositiveInput,
)
from .geometry import CorrespondenceSet, Homography, apply_homography, estimate_homography
from .simkit import (
    graycode_decode,
    graycode_generate,
    load_scenario,
    observe_patterns_through_homography,
    pattern_pair_count,
    run_scenario,
    trace_to_csv,
    trajectory_stats,
)
from .simkit.pipeline import Toggles

EXIT_CONFIG = 2
EXIT_TRACKING_LOST = 3
EXIT_ANALYSIS = 4


def parse_range(text: str) -> list[float]:
    """start:stop:step inclusive grid, or a single value.

    The stop value is included when it lands on the step grid (within a
    1e-9 relative tolerance).
    """
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) != 3:
            raise ValueError
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"range '{text}' is not 'value' or 'start:stop:step'") from None
    if step <= 0:
        raise argparse.ArgumentTypeError("range step must be positive")
    if stop < start:
        raise argparse.ArgumentTypeError("range stop is below start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(n)]


def _write_csv(header: str, rows, args, stem: str) -> None:
    """Assemble the whole table in memory, then emit it in one piece."""
    lines = [header]
    for row in rows:
        lines.append(",".join("%.12g" % v for v in row))
    text = "\n".join(lines) + "\n"
    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{stem}.csv"
        path.write_text(text)
        if not args.quiet:
            print(f"wrote {path}")
    else:
        sys.stdout.write(text)


def _plot_dir(args) -> Path:
    out = Path(args.out) if args.out is not None else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_design(args) -> int:
    from . import plotting

    if args.kind == "rayleigh":
        rows = [(d, ap, args.lam, optics.rayleigh_spot(d, args.lam, ap))
                for d in args.d for ap in args.aperture]
        _write_csv("d_m,D_m,lambda_m,spot_m", rows, args, "design_rayleigh")
        if args.plot:
            path = plotting.plot_rayleigh_grid(rows, _plot_dir(args)
                                               / "design_rayleigh.png")
            if not args.quiet:
                print(f"wrote {path}")
    elif args.kind == "shift":
        rows = []
        for z in args.z:
            for theta in args.theta:
                for dtheta in args.dtheta:
                    exact = steering.image_shift_exact(
                        z, math.radians(theta), math.radians(dtheta))
                    approx = steering.image_shift_approx(
                        z, math.radians(theta), math.radians(dtheta))
                    rows.append((z, theta, dtheta, exact, approx))
        _write_csv("z_m,theta_deg,dtheta_deg,shift_exact_m,shift_approx_m",
                   rows, args, "design_shift")
        if args.plot:
            path = plotting.plot_shift_curves(
                [(r[0], r[1], r[2], r[3]) for r in rows],
                _plot_dir(args) / "design_shift.png")
            if not args.quiet:
                print(f"wrote {path}")
    elif args.kind == "settle":
        mirror = steering.MirrorModel()
        rows = [(s, steering.settle_time(mirror, math.radians(s)))
                for s in args.step]
        _write_csv("step_deg,settle_s", rows, args, "design_settle")
        if args.plot:
            path = plotting.plot_settle_curve(rows,
                                              _plot_dir(args) / "design_settle.png")
            if not args.quiet:
                print(f"wrote {path}")
    else:  # fov
        eyepiece = optics.DEFAULT_EYEPIECE
        rows = []
        for throw in args.throw:
            fh, fv = optics.fov_at_throw(eyepiece, throw)
            rows.append((throw, fh, fv))
        _write_csv("throw_m,fov_h_deg,fov_v_deg", rows, args, "design_fov")
        if args.plot:
            path = plotting.plot_fov_curve(rows, _plot_dir(args) / "design_fov.png")
            if not args.quiet:
                print(f"wrote {path}")
    return 0


def cmd_simulate(args) -> int:
    scene, motion, pipeline, duration = load_scenario(args.scenario)
    if args.duration is not None:
        duration = args.duration
    if args.seed is not None:
        pipeline = type(pipeline)(
            capture_rate=pipeline.capture_rate, detect_rate=pipeline.detect_rate,
            display_rate=pipeline.display_rate, capture_delay=pipeline.capture_delay,
            detect_delay=pipeline.detect_delay, display_delay=pipeline.display_delay,
            capture_phase=pipeline.capture_phase, detect_phase=pipeline.detect_phase,
            display_phase=pipeline.display_phase, seed=args.seed)
    toggles = Toggles(warp_on=not args.no_warp, steer_on=not args.no_steer,
                      refocus_on=not args.no_refocus)
    trace = run_scenario(scene, motion, pipeline, duration, toggles)

    out_dir = Path(args.out) if args.out is not None else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.scenario).stem
    trace_path = out_dir / f"{stem}_trace.csv"
    trace_path.write_text(trace_to_csv(trace))
    if not args.quiet:
        print(f"wrote {trace_path}")

    if args.plot:
        from . import plotting
        path = plotting.plot_trace(trace.samples, out_dir / f"{stem}_trace.png")
        if not args.quiet:
            print(f"wrote {path}")

    if not any(s.markers_visible for s in trace.samples):
        print("tracking lost for the entire run", file=sys.stderr)
        return EXIT_TRACKING_LOST

    stats = trajectory_stats(trace)
    print(f"samples: {stats['n_samples']}")
    for key in ("mean_center_px", "mean_offset_px", "rms_jitter_px",
                "max_excursion_px"):
        x, y = stats[key]
        print(f"{key}: x={x:.6g} y={y:.6g}")
    print(f"mean_latency_s: {stats['mean_latency_s']:.6g}")
    return 0


def cmd_mtf(args) -> int:
    try:
        image = imaging.read_pgm(args.image)
    except (OSError, ValueError) as exc:
        print(f"cannot read image: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.roi is not None:
        try:
            x, y, w, h = (int(v) for v in args.roi.split(","))
            image = image.crop(x, y, w, h)
        except ValueError as exc:
            print(f"bad --roi: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        profile = imaging.esf_from_roi(image)
        curve = imaging.mtf_from_esf(profile)
        f50 = imaging.half_contrast_frequency(curve)
    except (NoEdgeFound, NoHalfContrastCrossing) as exc:
        print(f"analysis failed: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    cpd = f50 / args.pitch

    rows = list(zip(curve.frequencies, curve.response))
    _write_csv("freq_cypx,response", rows, args,
               Path(args.image).stem + "_mtf")
    print("mtf50_cypx,mtf50_cpd")
    print("%.12g,%.12g" % (f50, cpd))
    if args.plot:
        from . import plotting
        path = plotting.plot_mtf(profile, curve, f50,
                                 _plot_dir(args) / (Path(args.image).stem + "_mtf.png"))
        if not args.quiet:
            print(f"wrote {path}")
    return 0


def _random_projective_map(rng, cam_size, proj_size) -> Homography:
    """Mild random camera-to-projector map keeping the rasters overlapped."""
    cw, ch = cam_size
    pw, ph = proj_size
    sx = pw / cw
    sy = ph / ch
    m = np.array([
        [sx * (1.0 + 0.05 * rng.standard_normal()),
         0.02 * rng.standard_normal(), 8.0 * rng.standard_normal()],
        [0.02 * rng.standard_normal(),
         sy * (1.0 + 0.05 * rng.standard_normal()), 8.0 * rng.standard_normal()],
        [1e-5 * rng.standard_normal(), 1e-5 * rng.standard_normal(), 1.0],
    ])
    return Homography(m)


def cmd_calibrate(args) -> int:
    if args.width < 2 or args.height < 2:
        print("resolution must be at least 2x2", file=sys.stderr)
        return EXIT_CONFIG
    resolution = (args.width, args.height)
    cam_size = (args.camera_width or args.width,
                args.camera_height or args.height)
    patterns = graycode_generate(resolution)
    if args.mapping == "identity":
        h_true = Homography(np.eye(3))
    else:
        rng = np.random.default_rng(args.seed if args.seed is not None else 0)
        h_true = _random_projective_map(rng, cam_size, resolution)
    observed = observe_patterns_through_homography(patterns, h_true, cam_size)
    corr = graycode_decode(observed, resolution)
    h_est = estimate_homography(corr)
    mapped = apply_homography(h_est, corr.src)
    max_err = float(np.max(np.linalg.norm(mapped - corr.dst, axis=1)))
    probe = np.array([[0.0, 0.0], [cam_size[0] - 1.0, 0.0],
                      [cam_size[0] - 1.0, cam_size[1] - 1.0],
                      [0.0, cam_size[1] - 1.0],
                      [(cam_size[0] - 1) / 2.0, (cam_size[1] - 1) / 2.0]])
    dev = float(np.max(np.linalg.norm(
        apply_homography(h_est, probe) - apply_homography(h_true, probe),
        axis=1)))

    print(f"pattern pairs: {pattern_pair_count(resolution)}")
    print(f"correspondences: {len(corr)}")
    print("recovered camera-to-projector homography:")
    for row in h_est.h:
        print("  " + " ".join("%.9g" % v for v in row))
    print(f"max reprojection error vs decoded pixels: {max_err:.6g} px")
    print(f"max deviation vs true map over the camera frame: {dev:.6g} px")
    return 0


def _add_common(parser, suppress=False):
    # on subparsers the defaults are suppressed so a flag given before the
    # subcommand is not clobbered by the subparser's default
    d = argparse.SUPPRESS if suppress else None
    f = argparse.SUPPRESS if suppress else False
    parser.add_argument("--seed", type=int, default=d,
                        help="override the random seed used by the command")
    parser.add_argument("--out", default=d,
                        help="directory for CSV/PNG artifacts "
                             "(default: CSV to stdout, traces to cwd)")
    parser.add_argument("--quiet", action="store_true", default=f,
                        help="suppress informational messages")
    parser.add_argument("--plot", action="store_true", default=f,
                        help="also render matplotlib figures next to the CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamsim",
        description="Steered-projection display toolkit: design calculators, "
                    "closed-loop simulation, calibration demo, MTF analysis.")
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="grid-evaluate a design calculator")
    _add_common(p, suppress=True)
    p.add_argument("kind", choices=["rayleigh", "shift", "settle", "fov"])
    p.add_argument("--d", type=parse_range, default=parse_range("0.5:2.0:0.5"),
                   help="throw distance grid, m (rayleigh)")
    p.add_argument("--D", dest="aperture", type=parse_range,
                   default=parse_range("0.02:0.08:0.01"),
                   help="aperture grid, m (rayleigh)")
    p.add_argument("--lambda", dest="lam", type=float, default=550e-9,
                   help="wavelength, m (rayleigh)")
    p.add_argument("--z", type=parse_range, default=parse_range("1.0"),
                   help="projection distance grid, m (shift)")
    p.add_argument("--theta", type=parse_range, default=parse_range("0:60:15"),
                   help="base steering angle grid, deg (shift)")
    p.add_argument("--dtheta", type=parse_range, default=parse_range("0.1"),
                   help="steering error grid, deg (shift)")
    p.add_argument("--step", type=parse_range, default=parse_range("0:20:0.5"),
                   help="mirror step grid, deg (settle)")
    p.add_argument("--throw", type=parse_range,
                   default=parse_range("0.5:2.0:0.25"),
                   help="throw grid, m (fov)")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", help="run a closed-loop tracking scenario")
    _add_common(p, suppress=True)
    p.add_argument("scenario", help="scenario file path or bundled name "
                                    "(static.scn, slide_x.scn, depth_z.scn, "
                                    "yaw20.scn, pitch20.scn, roll20.scn)")
    p.add_argument("--duration", type=float, default=None,
                   help="simulated seconds (default: run.duration_s)")
    p.add_argument("--no-warp", action="store_true")
    p.add_argument("--no-steer", action="store_true")
    p.add_argument("--no-refocus", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mtf", help="slanted-edge MTF of a PGM image")
    _add_common(p, suppress=True)
    p.add_argument("image", help="binary PGM (P5) path")
    p.add_argument("--roi", default=None, help="x,y,w,h crop window")
    p.add_argument("--pitch", type=float, required=True,
                   help="angular pixel pitch, degrees per pixel")
    p.set_defaults(func=cmd_mtf)

    p = sub.add_parser("calibrate",
                       help="structured-light calibration round trip")
    _add_common(p, suppress=True)
    p.add_argument("--width", type=int, default=854)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--camera-width", type=int, default=None)
    p.add_argument("--camera-height", type=int, default=None)
    p.add_argument("--mapping", choices=["identity", "random"],
                   default="random")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonPositiveInput as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BeamSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
