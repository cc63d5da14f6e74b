"""BEV voxelization, ground-truth Gaussian heatmaps and the masked-MSE distillation loss.

BEV maps index rows along x (forward) and columns along y (left).
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError


@dataclass(frozen=True)
class BevGrid:
    x_bounds: tuple = (0.0, 72.0)
    y_bounds: tuple = (-16.0, 16.0)
    height: int = 180
    width: int = 80

    def __post_init__(self):
        for name in ("x_bounds", "y_bounds"):
            lo, hi = (float(v) for v in getattr(self, name))
            if not hi > lo:
                raise ConfigError(f"{name} must be nonempty, got [{lo}, {hi}]")
            object.__setattr__(self, name, (lo, hi))
        if int(self.height) < 1 or int(self.width) < 1:
            raise ConfigError(f"BEV shape must be positive, got {self.height}x{self.width}")
        object.__setattr__(self, "height", int(self.height))
        object.__setattr__(self, "width", int(self.width))

    @classmethod
    def from_cartesian(cls, grid):
        """Top-down projection of a CartesianGridSpec."""
        nx, ny, _ = grid.shape
        return cls(grid.x_bounds, grid.y_bounds, nx, ny)

    @property
    def shape(self):
        return (self.height, self.width)

    @property
    def cell_x(self):
        return (self.x_bounds[1] - self.x_bounds[0]) / self.height

    @property
    def cell_y(self):
        return (self.y_bounds[1] - self.y_bounds[0]) / self.width

    def cell_center(self, i, j):
        return (
            self.x_bounds[0] + (i + 0.5) * self.cell_x,
            self.y_bounds[0] + (j + 0.5) * self.cell_y,
        )

    def cell_index(self, x, y):
        """Integer cell indices (may fall outside the grid)."""
        i = np.floor((np.asarray(x, dtype=np.float64) - self.x_bounds[0]) / self.cell_x)
        j = np.floor((np.asarray(y, dtype=np.float64) - self.y_bounds[0]) / self.cell_y)
        return i.astype(np.int64), j.astype(np.int64)


@dataclass(frozen=True, eq=False)
class BEVFeatureMap:
    values: np.ndarray
    grid: BevGrid = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise DimensionError(f"BEV feature map must be C x H x W, got shape {values.shape}")
        if self.grid is not None and values.shape[1:] != self.grid.shape:
            raise DimensionError(f"values {values.shape} do not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise DimensionError("BEV feature values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class BoxLabel:
    center_x: float
    center_y: float
    length: float
    width: float
    yaw: float = 0.0

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ConfigError(f"box length and width must be > 0, got {self.length}x{self.width}")

    def footprint_extent(self):
        """Axis-aligned (x, y) extent of the rotated box."""
        c, s = abs(math.cos(self.yaw)), abs(math.sin(self.yaw))
        return self.length * c + self.width * s, self.length * s + self.width * c


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError(f"loss weights must be >= 0, got {self.alpha}, {self.beta}")


def voxelize_bev(cloud, grid: BevGrid) -> BEVFeatureMap:
    """Three channels per cell: max power, point count, mean z (zeros where empty)."""
    out = np.zeros((3,) + grid.shape)
    if len(cloud):
        pts = cloud.points.astype(np.float64)
        i, j = grid.cell_index(pts[:, 0], pts[:, 1])
        inside = (i >= 0) & (i < grid.height) & (j >= 0) & (j < grid.width)
        flat = i[inside] * grid.width + j[inside]
        size = grid.height * grid.width
        max_power = np.zeros(size)
        np.maximum.at(max_power, flat, pts[inside, 3])
        count = np.bincount(flat, minlength=size).astype(np.float64)
        z_sum = np.bincount(flat, weights=pts[inside, 2], minlength=size)
        mean_z = np.divide(z_sum, count, out=np.zeros(size), where=count > 0)
        out = np.stack([max_power, count, mean_z]).reshape((3,) + grid.shape)
    return BEVFeatureMap(out, grid)


def gaussian_sigmas(label: BoxLabel, grid: BevGrid):
    """Per-axis sigma in cells: a sixth of the footprint extent, at least one cell."""
    ext_x, ext_y = label.footprint_extent()
    return max(ext_x / 6.0 / grid.cell_x, 1.0), max(ext_y / 6.0 / grid.cell_y, 1.0)


def splat_gaussian_heatmap(labels, grid: BevGrid):
    """Peak-1 Gaussians on each label's center cell, combined by element-wise max.

    Returns an ``(H, W)`` array with values in [0, 1].  Each Gaussian is
    truncated to a rectangle of three sigmas (rounded up) around its center.
    """
    heat = np.zeros(grid.shape)
    for label in labels:
        sx, sy = gaussian_sigmas(label, grid)
        ci, cj = (int(v) for v in grid.cell_index(label.center_x, label.center_y))
        rx, ry = math.ceil(3 * sx), math.ceil(3 * sy)
        i0, i1 = max(ci - rx, 0), min(ci + rx + 1, grid.height)
        j0, j1 = max(cj - ry, 0), min(cj + ry + 1, grid.width)
        if i0 >= i1 or j0 >= j1:
            continue
        di = np.arange(i0, i1) - ci
        dj = np.arange(j0, j1) - cj
        g = np.exp(-0.5 * (di[:, None] / sx) ** 2 - 0.5 * (dj[None, :] / sy) ** 2)
        np.maximum(heat[i0:i1, j0:j1], g, out=heat[i0:i1, j0:j1])
    return heat


def _values(x):
    return x.values if isinstance(x, BEVFeatureMap) else np.asarray(x, dtype=np.float64)


def masked_mse(teacher, student, mask):
    """Mean over C*H*W of ``(mask * teacher - mask * student) ** 2``; mask is H x W."""
    t, s, m = _values(teacher), _values(student), np.asarray(mask, dtype=np.float64)
    if t.shape != s.shape:
        raise DimensionError(f"teacher {t.shape} and student {s.shape} shapes differ")
    if t.ndim != 3 or m.shape != t.shape[1:]:
        raise DimensionError(f"mask {m.shape} does not match feature spatial dims {t.shape[1:]}")
    diff = m * t - m * s
    return float(np.mean(diff * diff))


def total_loss(l_detect, l_distill, weights: LossWeights = LossWeights()):
    return weights.alpha * l_detect + weights.beta * l_distill


# -- label files and image export -------------------------------------------

def read_labels(path):
    """CSV with header center_x,center_y,length,width[,yaw]."""
    labels = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                labels.append(BoxLabel(
                    float(row["center_x"]), float(row["center_y"]),
                    float(row["length"]), float(row["width"]),
                    float(row.get("yaw") or 0.0),
                ))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad label row ({exc})") from None
    return labels


def encode_pgm(image):
    """Binary 8-bit PGM of an array in [0, 1]."""
    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    pixels = np.round(img * 255).astype(np.uint8)
    h, w = pixels.shape
    return f"P5\n{w} {h}\n255\n".encode() + pixels.tobytes()
