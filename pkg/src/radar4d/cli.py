"""Command-line front end: ``radar4d <command> ...``.

The default worker count for multi-frame commands comes from the
``RADAR4D_THREADS`` environment variable (1 if unset).
"""

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import yaml

from . import _container
from .bev import BevGrid, encode_pgm, masked_mse, read_labels, splat_gaussian_heatmap, voxelize_bev
from .cartesian import CartesianGridSpec, filter_cartesian_percentile, resample_to_cartesian, write_cvox
from .cfar import CfarConfig, TlpConfig, ca_cfar, two_level_preproc
from .cube import PolarGridSpec, power_map, read_4drt, write_4drt
from .errors import ConfigError
from .percentile import filter_polar_percentile
from .pipelines import MODES, ModeSpec, fusion_demo, labels_from_scene, run_mode
from .pointcloud_io import read_cloud, size_stats, write_cloud, write_cloud_csv
from .scene import default_grid, generate_4drt, load_scene, random_scene, scene_to_dict

log = logging.getLogger("radar4d")

THREADS_ENV = "RADAR4D_THREADS"


def _threads_default():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return n


def _positive_int(name):
    def parse(text):
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer, got {text!r}")
        if value < 1:
            raise argparse.ArgumentTypeError(f"{name} must be >= 1, got {value}")
        return value
    return parse


def _percentile(name):
    def parse(text):
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}")
        if not 0 <= value <= 100:
            raise argparse.ArgumentTypeError(f"{name} must lie in [0, 100], got {value}")
        return value
    return parse


def _triple(name):
    def parse(text):
        try:
            parts = [int(v) for v in text.split(",")]
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an int or a,r,e ints, got {text!r}")
        if len(parts) == 1:
            parts = parts * 3
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"{name} needs 1 or 3 values, got {text!r}")
        return tuple(parts)
    return parse


# -- CFAR / mode options -----------------------------------------------------

_CFAR_KEYS = {"training_cells", "guard_cells", "scale_alpha", "pfa", "axes", "second_stage_r"}


def _add_cfar_args(p):
    g = p.add_argument_group("CFAR / TLP")
    g.add_argument("--config", help="YAML file with CFAR/TLP keys: " + ", ".join(sorted(_CFAR_KEYS)))
    g.add_argument("--train", type=_triple("--train"), help="training cells per side (n or a,r,e)")
    g.add_argument("--guard", type=_triple("--guard"), help="guard cells per side (n or a,r,e)")
    g.add_argument("--alpha", type=float, help="CFAR scale factor (overrides --pfa)")
    g.add_argument("--pfa", type=float, help="target false-alarm rate used to derive alpha")
    g.add_argument("--axes", help="comma-separated window axes from azimuth,range,elevation")
    g.add_argument("--r2", type=_percentile("--r2"), help="TLP per-ring percentile")


def _mode_spec(args, mode=None, r=None):
    doc = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            doc = yaml.safe_load(fh) or {}
        if not isinstance(doc, dict):
            raise ConfigError(f"{args.config}: expected a mapping")
        unknown = set(doc) - _CFAR_KEYS
        if unknown:
            raise ConfigError(f"{args.config}: unknown key(s) {', '.join(sorted(unknown))}")
    overrides = {
        "training_cells": args.train, "guard_cells": args.guard,
        "scale_alpha": args.alpha, "pfa": args.pfa,
        "axes": tuple(args.axes.split(",")) if args.axes else None,
        "second_stage_r": args.r2,
    }
    doc.update({k: v for k, v in overrides.items() if v is not None})
    second = float(doc.pop("second_stage_r", 50.0))
    if "axes" in doc:
        doc["axes"] = tuple(doc["axes"])
    cfar = CfarConfig(**doc)
    return ModeSpec(
        mode or args.mode, r=args.r if r is None else r,
        voxel=args.voxel, cfar=cfar, second_stage_r=second,
    )


# -- commands ------------------------------------------------------------------

def cmd_gen_scene(args):
    if args.scene:
        scene, grid = load_scene(args.scene)
        if args.seed is not None:
            scene = type(scene)(scene.scatterers, scene.noise_mean, args.seed)
        grid = grid or default_grid()
    else:
        grid = default_grid()
        if args.shape is not None:
            grid = PolarGridSpec(*args.shape, grid.azimuth_bounds, grid.elevation_bounds,
                                 grid.range_start, grid.range_step, grid.doppler_step)
        scene = random_scene(grid, args.scatterers, args.seed or 0, noise_mean=args.noise_mean)
    write_4drt(args.output, generate_4drt(scene, grid))
    if args.dump_scene:
        _container.atomic_write(args.dump_scene, yaml.safe_dump(scene_to_dict(scene, grid)).encode())
    print(f"wrote {args.output}: shape {grid.shape}, {len(scene.scatterers)} scatterers, "
          f"seed {scene.seed}")


def _preproc_one(path, out_path, spec, csv_path=None, cvox_path=None):
    tensor = read_4drt(path)
    frame_id = os.path.splitext(os.path.basename(path))[0]
    if cvox_path and spec.mode == "cartesian":
        voxels = resample_to_cartesian(power_map(tensor), CartesianGridSpec(voxel_size=spec.voxel))
        write_cvox(cvox_path, voxels)
        cloud = filter_cartesian_percentile(voxels, spec.r, frame_id)
    else:
        cloud = run_mode(tensor, spec, frame_id)
    write_cloud(out_path, cloud)
    if csv_path:
        write_cloud_csv(csv_path, cloud)
    return out_path, len(cloud)


def cmd_preproc(args):
    spec = _mode_spec(args)
    inputs = args.inputs
    if len(inputs) == 1 and not os.path.isdir(args.output):
        jobs = [(inputs[0], args.output)]
    else:
        os.makedirs(args.output, exist_ok=True)
        jobs = [
            (p, os.path.join(args.output, os.path.splitext(os.path.basename(p))[0] + ".rpc1"))
            for p in inputs
        ]
    for path, _ in jobs:
        if not os.path.exists(path):
            raise ConfigError(f"input file not found: {path}")

    def run(job):
        path, out = job
        stem = os.path.splitext(out)[0]
        return _preproc_one(
            path, out, spec,
            csv_path=stem + ".csv" if args.csv else None,
            cvox_path=stem + ".cvox" if args.cvox else None,
        )

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        # map() preserves input order, so the report is thread-count independent
        for out, n in pool.map(run, jobs):
            print(f"{out}: {n} points ({spec.label})")


def cmd_stats(args):
    roi = CartesianGridSpec()
    print(f"{'file':<32} {'points':>10} {'bytes':>12} {'MB':>10} {'pts/m^3':>10}")
    for path in args.inputs:
        s = size_stats(read_cloud(path), roi)
        print(f"{os.path.basename(path):<32} {s.num_points:>10d} {s.bytes_on_disk:>12d} "
              f"{s.megabytes:>10.4f} {s.density:>10.4f}")


def compare_table(tensor, specs):
    """Rows of (label, points, bytes, count ratio, byte ratio) relative to the sparsest run."""
    roi = CartesianGridSpec()
    stats = [(spec.label, size_stats(run_mode(tensor, spec), roi)) for spec in specs]
    base = min(stats, key=lambda kv: kv[1].num_points)[1]
    rows = []
    for label, s in stats:
        count_ratio = s.num_points / base.num_points if base.num_points else float("inf")
        rows.append((label, s.num_points, s.bytes_on_disk, count_ratio,
                     s.bytes_on_disk / base.bytes_on_disk))
    return rows


def cmd_compare(args):
    tensor = read_4drt(args.input)
    specs = [_mode_spec(args, mode="polar-percentile", r=r) for r in (args.r or [])]
    for mode in args.mode or []:
        specs.append(_mode_spec(args, mode=mode, r=args.r_mode))
    if not specs:
        raise ConfigError("compare needs at least one --r or --mode")
    rows = compare_table(tensor, specs)
    print(f"{'pre-processing':<34} {'points':>10} {'bytes':>12} {'MB/frame':>10} "
          f"{'count x':>9} {'bytes x':>9}")
    for label, n, b, cr, br in rows:
        print(f"{label:<34} {n:>10d} {b:>12d} {b / 1e6:>10.4f} {cr:>9.2f} {br:>9.2f}")


def _bev_grid(args):
    return BevGrid((args.x_min, args.x_max), (args.y_min, args.y_max), args.height, args.width)


def cmd_heatmap(args):
    labels = read_labels(args.labels)
    heat = splat_gaussian_heatmap(labels, _bev_grid(args))
    _container.atomic_write(args.output, encode_pgm(heat))
    if args.csv:
        lines = [",".join(f"{v:.17g}" for v in row) for row in heat]
        _container.atomic_write(args.csv, ("\n".join(lines) + "\n").encode())
    print(f"wrote {args.output}: {heat.shape[0]}x{heat.shape[1]}, {len(labels)} objects, "
          f"max {heat.max():.6g}")


def cmd_distill_demo(args):
    grid = _bev_grid(args)
    teacher = voxelize_bev(read_cloud(args.teacher), grid)
    student = voxelize_bev(read_cloud(args.student), grid)
    mask = splat_gaussian_heatmap(read_labels(args.labels), grid)
    print(repr(masked_mse(teacher, student, mask)))


def cmd_fusion_demo(args):
    if args.input:
        tensor = read_4drt(args.input)
        if not args.labels:
            raise ConfigError("--labels is required with --input")
        labels = read_labels(args.labels)
    else:
        grid = default_grid()
        scene = random_scene(grid, args.scatterers, args.seed)
        tensor = generate_4drt(scene, grid)
        labels = read_labels(args.labels) if args.labels else labels_from_scene(scene)
    t0 = time.perf_counter()
    out = fusion_demo(tensor, labels, size=args.size, seed=args.seed,
                      fused_channels=args.fused_channels)
    print(f"teacher points: {out['teacher_points']}  student points: {out['student_points']}")
    print(f"F_T shape {out['teacher_shape']}  F_S shape {out['student_shape']}")
    for stage, secs in out["timings"].items():
        print(f"  {stage:<10} {secs:8.3f} s")
    print(f"total {time.perf_counter() - t0:.3f} s")
    print(f"L_distill = {out['l_distill']!r}")


def cmd_bench(args):
    stages = {}
    t0 = time.perf_counter()
    if args.input:
        tensor = read_4drt(args.input)
        stages["read"] = time.perf_counter() - t0
    else:
        grid = default_grid()
        tensor = generate_4drt(random_scene(grid, 8, args.seed), grid)
        stages["gen-scene"] = time.perf_counter() - t0
    timed = [
        ("power_map", lambda: power_map(tensor)),
        ("polar-percentile", lambda: filter_polar_percentile(tensor, 99.9)),
        ("cartesian", lambda: run_mode(tensor, ModeSpec("cartesian", r=90.0))),
        ("cfar", lambda: ca_cfar(power_map(tensor), CfarConfig())),
        ("tlp", lambda: two_level_preproc(tensor, TlpConfig())),
    ]
    for name, fn in timed:
        best = float("inf")
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        stages[name] = best
    print(f"tensor shape {tensor.grid.shape}, best of {args.repeat}")
    for name, secs in stages.items():
        print(f"  {name:<18} {secs * 1e3:10.2f} ms")


# -- parser ----------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="radar4d", description="4D radar tensor pre-processing, BEV distillation and fusion tools.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scene", help="synthesize a 4DRT file")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--scene", help="YAML scene file (seed, noise_mean, grid, scatterers)")
    p.add_argument("--seed", type=int)
    p.add_argument("--scatterers", type=int, default=8)
    p.add_argument("--noise-mean", type=float, default=1.0)
    p.add_argument("--shape", type=int, nargs=4, metavar=("A", "R", "E", "D"))
    p.add_argument("--dump-scene", help="also write the scene as YAML")
    p.set_defaults(func=cmd_gen_scene)

    p = sub.add_parser("preproc", help="4DRT -> RPC1 point cloud")
    p.add_argument("inputs", nargs="+")
    p.add_argument("-o", "--output", required=True, help="output file, or directory for many inputs")
    p.add_argument("--mode", choices=MODES, required=True)
    p.add_argument("--r", type=_percentile("--r"), default=99.9,
                   help="percentile for the percentile modes (default 99.9)")
    p.add_argument("--voxel", type=float, default=0.4, help="Cartesian voxel edge in meters")
    p.add_argument("--csv", action="store_true", help="also write x,y,z,power CSV")
    p.add_argument("--cvox", action="store_true", help="also write the CVOX voxel volume")
    p.add_argument("--threads", type=_positive_int("--threads"), default=None,
                   help=f"worker threads for many inputs (default ${THREADS_ENV} or 1)")
    _add_cfar_args(p)
    p.set_defaults(func=cmd_preproc)

    p = sub.add_parser("stats", help="point count, bytes and density of RPC1 files")
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("compare", help="point-count / byte table across modes")
    p.add_argument("input")
    p.add_argument("--r", type=_percentile("--r"), action="append",
                   help="polar-percentile run at this r (repeatable)")
    p.add_argument("--mode", choices=MODES, action="append", help="extra mode (repeatable)")
    p.add_argument("--r-mode", type=_percentile("--r-mode"), default=90.0,
                   help="percentile used by --mode percentile runs")
    p.add_argument("--voxel", type=float, default=0.4)
    _add_cfar_args(p)
    p.set_defaults(func=cmd_compare)

    def bev_args(p, size=(180, 80)):
        p.add_argument("--x-min", type=float, default=0.0)
        p.add_argument("--x-max", type=float, default=72.0)
        p.add_argument("--y-min", type=float, default=-16.0)
        p.add_argument("--y-max", type=float, default=16.0)
        p.add_argument("--height", type=_positive_int("--height"), default=size[0])
        p.add_argument("--width", type=_positive_int("--width"), default=size[1])

    p = sub.add_parser("heatmap", help="labels CSV -> Gaussian heatmap PGM (+ CSV)")
    p.add_argument("labels")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--csv")
    bev_args(p)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("distill-demo", help="masked MSE between two clouds' BEV maps")
    p.add_argument("teacher")
    p.add_argument("student")
    p.add_argument("labels")
    bev_args(p)
    p.set_defaults(func=cmd_distill_demo)

    p = sub.add_parser("fusion-demo", help="aggregate + densify forward passes and masked MSE")
    p.add_argument("--input", help="4DRT file (default: synthesize one)")
    p.add_argument("--labels", help="labels CSV (default: boxes on the synthetic scatterers)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scatterers", type=int, default=6)
    p.add_argument("--size", type=_positive_int("--size"), default=32)
    p.add_argument("--fused-channels", type=_positive_int("--fused-channels"), default=128)
    p.set_defaults(func=cmd_fusion_demo)

    p = sub.add_parser("bench", help="wall time per pipeline stage")
    p.add_argument("--input")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeat", type=_positive_int("--repeat"), default=3)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if getattr(args, "threads", 0) is None:
            args.threads = _threads_default()
            if args.threads < 1:
                raise ConfigError(f"{THREADS_ENV} must be >= 1, got {args.threads}")
        args.func(args)
    except (ValueError, OSError, IndexError, yaml.YAMLError) as exc:
        print(f"radar4d {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
