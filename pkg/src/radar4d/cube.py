"""Polar radar grids, 4D radar tensors, point clouds and coordinate transforms.

Storage order is row-major over (azimuth, range, elevation, Doppler).  All
power values are linear; conversion to dB is left to presentation code.
"""

import struct
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _container
from .errors import ConfigError, DimensionError, DomainError, FormatError

MAGIC_4DRT = b"4DRT"


@dataclass(frozen=True)
class PolarGridSpec:
    n_azimuth: int
    n_range: int
    n_elevation: int
    n_doppler: int
    azimuth_bounds: tuple
    elevation_bounds: tuple
    range_start: float
    range_step: float
    doppler_step: float = 1.0

    def __post_init__(self):
        for name in ("n_azimuth", "n_range", "n_elevation", "n_doppler"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
            object.__setattr__(self, name, int(getattr(self, name)))
        for name in ("azimuth_bounds", "elevation_bounds"):
            lo, hi = (float(v) for v in getattr(self, name))
            if not hi > lo:
                raise ConfigError(f"{name} must satisfy max > min, got [{lo}, {hi}]")
            object.__setattr__(self, name, (lo, hi))
        if not self.range_step > 0:
            raise ConfigError(f"range_step must be > 0, got {self.range_step}")
        if not self.range_start >= 0:
            raise ConfigError(f"range_start must be >= 0, got {self.range_start}")
        if not self.doppler_step > 0:
            raise ConfigError(f"doppler_step must be > 0, got {self.doppler_step}")

    @property
    def shape(self):
        return (self.n_azimuth, self.n_range, self.n_elevation, self.n_doppler)

    @property
    def spatial_shape(self):
        return (self.n_azimuth, self.n_range, self.n_elevation)

    @property
    def azimuth_step(self):
        lo, hi = self.azimuth_bounds
        return (hi - lo) / self.n_azimuth

    @property
    def elevation_step(self):
        lo, hi = self.elevation_bounds
        return (hi - lo) / self.n_elevation

    def azimuth_centers(self):
        return self.azimuth_bounds[0] + (np.arange(self.n_azimuth) + 0.5) * self.azimuth_step

    def range_centers(self):
        return self.range_start + (np.arange(self.n_range) + 0.5) * self.range_step

    def elevation_centers(self):
        return self.elevation_bounds[0] + (np.arange(self.n_elevation) + 0.5) * self.elevation_step

    def doppler_centers(self):
        # bin n_doppler // 2 is zero velocity
        return (np.arange(self.n_doppler) - self.n_doppler // 2) * self.doppler_step

    def fractional_index(self, azimuth, range_, elevation):
        """Continuous coordinates to fractional bin indices (bin centers are integers)."""
        fa = (np.asarray(azimuth) - self.azimuth_bounds[0]) / self.azimuth_step - 0.5
        fr = (np.asarray(range_) - self.range_start) / self.range_step - 0.5
        fe = (np.asarray(elevation) - self.elevation_bounds[0]) / self.elevation_step - 0.5
        return fa, fr, fe

    def with_doppler(self, n_doppler):
        return PolarGridSpec(
            self.n_azimuth, self.n_range, self.n_elevation, n_doppler,
            self.azimuth_bounds, self.elevation_bounds,
            self.range_start, self.range_step, self.doppler_step,
        )


def _frozen(values, dtype):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RadarTensor4D:
    grid: PolarGridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.size != int(np.prod(self.grid.shape)):
            raise DimensionError(
                f"tensor has {values.size} values, grid expects {self.grid.shape}"
            )
        values = _frozen(values.reshape(self.grid.shape), np.float32)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DomainError("tensor values must be finite and >= 0 (linear power)")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class PowerVolume3D:
    grid: PolarGridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.size != int(np.prod(self.grid.spatial_shape)):
            raise DimensionError(
                f"volume has {values.size} values, grid expects {self.grid.spatial_shape}"
            )
        values = _frozen(values.reshape(self.grid.spatial_shape), np.float64)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DomainError("volume values must be finite and >= 0 (linear power)")
        object.__setattr__(self, "values", values)

    def scaled(self, c):
        return PowerVolume3D(self.grid, self.values * c)


class RadarPoint(NamedTuple):
    x: float
    y: float
    z: float
    power: float


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Ordered detections stored as an ``(N, 4)`` float32 array of ``[x, y, z, power]``."""

    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 4), np.float32))
    frame_id: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float32).reshape(-1, 4)
        if not np.all(np.isfinite(pts)):
            raise DomainError("point coordinates and power must be finite")
        if np.any(pts[:, 3] < 0):
            raise DomainError("point power must be >= 0")
        object.__setattr__(self, "points", _frozen(pts, np.float32))

    @classmethod
    def from_columns(cls, x, y, z, power, frame_id=""):
        return cls(np.stack([x, y, z, power], axis=1).astype(np.float32), frame_id)

    def __len__(self):
        return self.points.shape[0]

    def __iter__(self):
        for row in self.points:
            yield RadarPoint(*(float(v) for v in row))

    @property
    def xyz(self):
        return self.points[:, :3]

    @property
    def power(self):
        return self.points[:, 3]

    def same_points(self, other):
        """Bitwise equality of the point arrays (frame ids ignored)."""
        return self.points.shape == other.points.shape and bool(
            np.array_equal(self.points.view(np.uint32), other.points.view(np.uint32))
        )


def power_map(tensor: RadarTensor4D) -> PowerVolume3D:
    """Collapse the Doppler axis by its arithmetic mean (linear power)."""
    return PowerVolume3D(tensor.grid, tensor.values.mean(axis=3, dtype=np.float64))


def polar_to_cartesian(azimuth, range_, elevation):
    """Works elementwise on scalars or arrays; returns ``(x, y, z)``."""
    range_ = np.asarray(range_, dtype=np.float64)
    if np.any(range_ < 0):
        raise DomainError("range must be >= 0")
    cos_el = np.cos(elevation)
    x = range_ * cos_el * np.cos(azimuth)
    y = range_ * cos_el * np.sin(azimuth)
    z = range_ * np.sin(elevation)
    if x.ndim == 0:
        return float(x), float(y), float(z)
    return x, y, z


def cartesian_to_polar(x, y, z):
    """Inverse of :func:`polar_to_cartesian`.

    Azimuth lies in (-pi, pi] and elevation in [-pi/2, pi/2].  On the z axis
    the azimuth is canonicalized to 0.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    horiz = np.hypot(x, y)
    rng = np.hypot(horiz, z)
    if np.any(rng == 0):
        raise DomainError("cartesian_to_polar is undefined at the origin")
    azimuth = np.where(horiz == 0, 0.0, np.arctan2(y, x))
    # arctan2 returns -pi for (x<0, y=-0.0); fold onto the half-open interval
    azimuth = np.where(azimuth == -np.pi, np.pi, azimuth)
    elevation = np.arctan2(z, horiz)
    if azimuth.ndim == 0:
        return float(azimuth), float(rng), float(elevation)
    return azimuth, rng, elevation


def discrete_to_continuous(index, grid: PolarGridSpec):
    """Map an ``(i_azimuth, i_range, i_elevation)`` index triple to bin-center coordinates.

    Each component may be an integer array; out-of-bounds indices raise ``IndexError``.
    """
    ia, ir, ie = (np.asarray(i) for i in index)
    for name, i, n in (
        ("azimuth", ia, grid.n_azimuth),
        ("range", ir, grid.n_range),
        ("elevation", ie, grid.n_elevation),
    ):
        if np.any(i < 0) or np.any(i >= n):
            raise IndexError(f"{name} index out of bounds for size {n}")
    az = grid.azimuth_bounds[0] + (ia + 0.5) * grid.azimuth_step
    rg = grid.range_start + (ir + 0.5) * grid.range_step
    el = grid.elevation_bounds[0] + (ie + 0.5) * grid.elevation_step
    if az.ndim == 0:
        return float(az), float(rg), float(el)
    return az, rg, el


def cells_to_cloud(volume: PowerVolume3D, mask, frame_id="") -> PointCloud:
    """Emit the cells selected by ``mask`` as points, in row-major scan order."""
    ia, ir, ie = np.nonzero(mask)
    if ia.size == 0:
        return PointCloud(frame_id=frame_id)
    az, rg, el = discrete_to_continuous((ia, ir, ie), volume.grid)
    x, y, z = polar_to_cartesian(az, rg, el)
    return PointCloud.from_columns(x, y, z, volume.values[ia, ir, ie], frame_id)


# -- 4DRT container ---------------------------------------------------------

_GRID_FLOATS = 7


def encode_4drt(tensor: RadarTensor4D) -> bytes:
    g = tensor.grid
    header = MAGIC_4DRT + struct.pack(
        "<H4I7d",
        _container.VERSION,
        g.n_azimuth, g.n_range, g.n_elevation, g.n_doppler,
        *g.azimuth_bounds, *g.elevation_bounds,
        g.range_start, g.range_step, g.doppler_step,
    )
    return header + tensor.values.astype("<f4").tobytes(order="C")


def decode_4drt(data: bytes) -> RadarTensor4D:
    r = _container.Reader(data, "4DRT file")
    r.magic(MAGIC_4DRT)
    r.version()
    counts = r.unpack("4I")
    floats = r.unpack(f"{_GRID_FLOATS}d")
    try:
        grid = PolarGridSpec(*counts, floats[0:2], floats[2:4], *floats[4:7])
    except ConfigError as exc:
        raise FormatError(f"invalid grid header: {exc}", 6) from None
    n = int(np.prod(counts))
    offset = r.pos
    values = np.frombuffer(r.take(4 * n), dtype="<f4").reshape(grid.shape)
    r.finish()
    try:
        return RadarTensor4D(grid, values)
    except DomainError as exc:
        raise FormatError(f"invalid tensor payload: {exc}", offset) from None


def write_4drt(path, tensor: RadarTensor4D):
    _container.atomic_write(path, encode_4drt(tensor))


def read_4drt(path) -> RadarTensor4D:
    with open(path, "rb") as fh:
        return decode_4drt(fh.read())
