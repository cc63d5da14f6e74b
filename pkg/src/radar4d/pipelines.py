"""End-to-end pre-processing modes and the desk-scale distillation demo."""

import time
from dataclasses import dataclass, field

import numpy as np

from .bev import BevGrid, BoxLabel, masked_mse, splat_gaussian_heatmap, total_loss, voxelize_bev
from .cartesian import CartesianGridSpec, filter_cartesian_percentile, resample_to_cartesian
from .cfar import CfarConfig, TlpConfig, ca_cfar, two_level_preproc
from .cube import polar_to_cartesian, power_map
from .errors import ConfigError
from .fusion import DensifyConfig, aggregate, densify_forward, init_aggregation_params, init_densify_params
from .fusion.primitives import conv2d
from .percentile import filter_polar_percentile

MODES = ("polar-percentile", "cartesian", "cfar", "tlp")


@dataclass(frozen=True)
class ModeSpec:
    mode: str
    r: float = 99.9
    voxel: float = 0.4
    cfar: CfarConfig = field(default_factory=CfarConfig)
    second_stage_r: float = 50.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")

    @property
    def label(self):
        if self.mode == "polar-percentile":
            return f"polar r={self.r:g}"
        if self.mode == "cartesian":
            return f"cartesian r={self.r:g} voxel={self.voxel:g}"
        if self.mode == "cfar":
            return f"cfar alpha={self.cfar.scale_alpha:.4g}"
        return f"tlp alpha={self.cfar.scale_alpha:.4g} r2={self.second_stage_r:g}"


def run_mode(tensor, spec: ModeSpec, frame_id=""):
    if spec.mode == "polar-percentile":
        return filter_polar_percentile(tensor, spec.r, frame_id)
    if spec.mode == "cartesian":
        grid = CartesianGridSpec(voxel_size=spec.voxel)
        voxels = resample_to_cartesian(power_map(tensor), grid)
        return filter_cartesian_percentile(voxels, spec.r, frame_id)
    if spec.mode == "cfar":
        return ca_cfar(power_map(tensor), spec.cfar, frame_id)
    return two_level_preproc(tensor, TlpConfig(spec.cfar, spec.second_stage_r), frame_id)


def labels_from_scene(scene, length=4.5, width=1.8):
    """One car-sized box per scatterer, centered on its Cartesian position."""
    labels = []
    for s in scene.scatterers:
        x, y, _ = polar_to_cartesian(s.azimuth, s.range, s.elevation)
        labels.append(BoxLabel(x, y, length, width))
    return labels


def lift_features(bev_values, channels, seed):
    """Seeded 1x1 expansion of BEV statistics to backbone width (stand-in for a backbone)."""
    rng = np.random.default_rng(seed)
    c_in = bev_values.shape[0]
    weight = rng.uniform(-1, 1, size=(channels, c_in, 1, 1)) / np.sqrt(c_in)
    # log-compress power and counts so the lifted features stay O(1)
    x = np.sign(bev_values) * np.log1p(np.abs(bev_values))
    return conv2d(x, weight)


def fusion_demo(tensor, labels, size=32, seed=0, channels=768, fused_channels=128,
                teacher_modes=None, student_mode=None, weights=None):
    """Teachers and student from one tensor -> aggregate / densify -> masked MSE.

    Returns a dict of shapes, losses and per-stage wall times.
    """
    teacher_modes = teacher_modes or [
        ModeSpec("polar-percentile", r=90.0),
        ModeSpec("cartesian", r=90.0),
        ModeSpec("tlp"),
    ]
    student_mode = student_mode or ModeSpec("polar-percentile", r=99.9)
    grid = BevGrid((0.0, 72.0), (-16.0, 16.0), size, size)
    timings = {}

    t0 = time.perf_counter()
    teacher_clouds = [run_mode(tensor, m) for m in teacher_modes]
    student_cloud = run_mode(tensor, student_mode)
    timings["preprocess"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    seeds = np.random.SeedSequence(seed).spawn(len(teacher_modes) + 3)
    teachers = [
        lift_features(voxelize_bev(c, grid).values, channels, seeds[i])
        for i, c in enumerate(teacher_clouds)
    ]
    student = lift_features(voxelize_bev(student_cloud, grid).values, channels, seeds[-3])
    timings["voxelize"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    agg_params = init_aggregation_params(
        seeds[-2], n_teachers=len(teachers), in_channels=channels, fused_channels=fused_channels
    )
    f_teacher = aggregate(teachers, agg_params)
    timings["aggregate"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    dens_params = init_densify_params(
        np.random.default_rng(seeds[-1]),
        DensifyConfig(in_channels=channels, out_channels=fused_channels),
    )
    f_student = densify_forward(student, dens_params)
    timings["densify"] = time.perf_counter() - t0

    mask = splat_gaussian_heatmap(labels, grid)
    l_distill = masked_mse(f_teacher, f_student, mask)
    return {
        "teacher_points": [len(c) for c in teacher_clouds],
        "student_points": len(student_cloud),
        "teacher_shape": f_teacher.shape,
        "student_shape": f_student.shape,
        "l_distill": l_distill,
        "l_total_without_detect": total_loss(0.0, l_distill, *([weights] if weights else [])),
        "timings": timings,
    }
