"""Cell-averaging CFAR in polar coordinates, and two-level pre-processing (TLP).

Training-cell means come from an integral volume (summed-area table), so the
cost per cell is constant regardless of window size.  A cell is detected when
its power is strictly greater than ``scale_alpha`` times the training mean;
cells whose full window does not fit inside the grid are never detected.
"""

from dataclasses import dataclass, field

import numpy as np

from .cube import PowerVolume3D, RadarTensor4D, cells_to_cloud, power_map
from .errors import ConfigError
from .percentile import check_percentile, percentile_of

AXES = ("azimuth", "range", "elevation")


def alpha_for_pfa(pfa, n_training):
    """Scale factor giving false-alarm probability ``pfa`` on exponential noise."""
    if not 0 < pfa < 1:
        raise ConfigError(f"pfa must lie in (0, 1), got {pfa}")
    return n_training * (pfa ** (-1.0 / n_training) - 1.0)


def pfa_for_alpha(alpha, n_training):
    return (1.0 + alpha / n_training) ** (-n_training)


def _per_axis(value, name):
    if np.isscalar(value):
        value = (value,) * 3
    value = tuple(int(v) for v in value)
    if len(value) != 3:
        raise ConfigError(f"{name} needs one count per axis {AXES}, got {value}")
    return value


@dataclass(frozen=True)
class CfarConfig:
    """Window geometry and scale factor.

    ``training_cells`` and ``guard_cells`` are per-side counts along
    (azimuth, range, elevation); entries for axes not listed in ``axes`` are
    ignored (the window has zero extent there).
    """

    training_cells: tuple = (8, 8, 8)
    guard_cells: tuple = (2, 2, 2)
    scale_alpha: float = None
    axes: tuple = ("azimuth", "range")
    pfa: float = 1e-3

    def __post_init__(self):
        axes = tuple(self.axes)
        if not axes or any(a not in AXES for a in axes) or len(set(axes)) != len(axes):
            raise ConfigError(f"axes must be a nonempty subset of {AXES}, got {axes}")
        object.__setattr__(self, "axes", tuple(a for a in AXES if a in axes))
        training = _per_axis(self.training_cells, "training_cells")
        guard = _per_axis(self.guard_cells, "guard_cells")
        for a in self.axes:
            i = AXES.index(a)
            if training[i] < 1:
                raise ConfigError(f"training_cells on {a} must be >= 1, got {training[i]}")
            if guard[i] < 0:
                raise ConfigError(f"guard_cells on {a} must be >= 0, got {guard[i]}")
        object.__setattr__(self, "training_cells", training)
        object.__setattr__(self, "guard_cells", guard)
        if self.scale_alpha is None:
            object.__setattr__(self, "scale_alpha", alpha_for_pfa(self.pfa, self.n_training))
        if not self.scale_alpha > 0:
            raise ConfigError(f"scale_alpha must be > 0, got {self.scale_alpha}")

    @property
    def inner_half(self):
        return tuple(
            self.guard_cells[i] if a in self.axes else 0 for i, a in enumerate(AXES)
        )

    @property
    def outer_half(self):
        return tuple(
            self.guard_cells[i] + self.training_cells[i] if a in self.axes else 0
            for i, a in enumerate(AXES)
        )

    @property
    def n_training(self):
        outer = np.prod([2 * h + 1 for h in self.outer_half])
        inner = np.prod([2 * h + 1 for h in self.inner_half])
        return int(outer - inner)


@dataclass(frozen=True)
class TlpConfig:
    coarse: CfarConfig = field(default_factory=CfarConfig)
    second_stage_r: float = 50.0

    def __post_init__(self):
        check_percentile(self.second_stage_r)


def _box_sums(table, half, lo, hi):
    """Sums over boxes of half-width ``half`` centered on cells in [lo, hi)."""
    total = 0.0
    for corner in range(8):
        idx, sign = [], 1
        for axis in range(3):
            if corner >> axis & 1:
                idx.append(slice(lo[axis] + half[axis] + 1, hi[axis] + half[axis] + 1))
            else:
                idx.append(slice(lo[axis] - half[axis], hi[axis] - half[axis]))
                sign = -sign
        total = total + sign * table[tuple(idx)]
    return total


def integral_volume(values):
    table = np.zeros(tuple(n + 1 for n in values.shape))
    table[1:, 1:, 1:] = values.cumsum(0).cumsum(1).cumsum(2)
    return table


def cfar_mask(volume: PowerVolume3D, cfg: CfarConfig):
    """Boolean detection mask, same shape as the volume."""
    values = volume.values
    shape = values.shape
    outer, inner = cfg.outer_half, cfg.inner_half
    lo = outer
    hi = tuple(n - h for n, h in zip(shape, outer))
    if any(h <= l for l, h in zip(lo, hi)):
        raise ConfigError(
            f"CFAR window (half-widths {outer}) does not fit grid {shape} for any cell"
        )
    table = integral_volume(values)
    ring = _box_sums(table, outer, lo, hi) - _box_sums(table, inner, lo, hi)
    # clamp tiny negative sums produced by cancellation in the summed-area table
    noise = np.maximum(ring, 0.0) / cfg.n_training
    inside = tuple(slice(l, h) for l, h in zip(lo, hi))
    mask = np.zeros(shape, dtype=bool)
    mask[inside] = values[inside] > cfg.scale_alpha * noise
    return mask


def ca_cfar(volume: PowerVolume3D, cfg: CfarConfig, frame_id=""):
    return cells_to_cloud(volume, cfar_mask(volume, cfg), frame_id)


def tlp_mask(volume: PowerVolume3D, cfg: TlpConfig):
    """Coarse CFAR followed by a per-range-ring percentile over azimuth and elevation."""
    coarse = cfar_mask(volume, cfg.coarse)
    keep = np.zeros_like(coarse)
    for ir in np.flatnonzero(coarse.any(axis=(0, 2))):
        ring = volume.values[:, ir, :]
        survivors = coarse[:, ir, :]
        threshold = percentile_of(ring[survivors], cfg.second_stage_r)
        keep[:, ir, :] = survivors & (ring >= threshold)
    return keep


def two_level_preproc(tensor: RadarTensor4D, cfg: TlpConfig, frame_id=""):
    volume = power_map(tensor)
    return cells_to_cloud(volume, tlp_mask(volume, cfg), frame_id)
