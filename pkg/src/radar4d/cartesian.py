"""Resample a polar power volume onto a Cartesian voxel grid and percentile-filter it.

Each voxel center is mapped back to (azimuth, range, elevation).  Voxels whose
polar coordinates fall inside the hull of polar bin centers get the trilinear
interpolation of the 8 surrounding bins; the rest are flagged invalid and
excluded from every statistic.
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import _container
from .cube import PointCloud, PowerVolume3D, cartesian_to_polar
from .errors import ConfigError, DomainError, FormatError
from .percentile import percentile_of

MAGIC_CVOX = b"CVOX"


@dataclass(frozen=True)
class CartesianGridSpec:
    x_bounds: tuple = (0.0, 72.0)
    y_bounds: tuple = (-16.0, 16.0)
    z_bounds: tuple = (-2.0, 7.6)
    voxel_size: tuple = (0.4, 0.4, 0.4)

    def __post_init__(self):
        vs = self.voxel_size
        if np.isscalar(vs):
            vs = (vs, vs, vs)
        vs = tuple(float(v) for v in vs)
        if len(vs) != 3 or not all(v > 0 for v in vs):
            raise ConfigError(f"voxel_size must be three positive lengths, got {vs}")
        object.__setattr__(self, "voxel_size", vs)
        for name in ("x_bounds", "y_bounds", "z_bounds"):
            lo, hi = (float(v) for v in getattr(self, name))
            if not hi > lo:
                raise ConfigError(f"{name} must be nonempty, got [{lo}, {hi}]")
            object.__setattr__(self, name, (lo, hi))

    @property
    def bounds(self):
        return (self.x_bounds, self.y_bounds, self.z_bounds)

    @property
    def shape(self):
        # round, not floor: 9.6 / 0.4 evaluates to 23.999999999999996
        return tuple(
            max(1, int(round((hi - lo) / v)))
            for (lo, hi), v in zip(self.bounds, self.voxel_size)
        )

    @property
    def volume_m3(self):
        return float(np.prod([hi - lo for lo, hi in self.bounds]))

    def centers(self, axis):
        lo = self.bounds[axis][0]
        return lo + (np.arange(self.shape[axis]) + 0.5) * self.voxel_size[axis]


@dataclass(frozen=True, eq=False)
class CartesianVoxelVolume:
    grid: CartesianGridSpec
    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).reshape(self.grid.shape)
        valid = np.array(self.valid, dtype=bool).reshape(self.grid.shape)
        values[~valid] = 0.0
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DomainError("valid voxels must carry finite power >= 0")
        values.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)


def voxel_polar_coordinates(grid: CartesianGridSpec):
    """Polar coordinates of every voxel center, each shaped like the voxel grid."""
    x, y, z = np.meshgrid(grid.centers(0), grid.centers(1), grid.centers(2), indexing="ij")
    origin = (x == 0) & (y == 0) & (z == 0)
    # the sensor origin has no direction; park it at +x, range 0
    az, rg, el = cartesian_to_polar(np.where(origin, 1.0, x), y, z)
    return az, np.where(origin, 0.0, rg), el


def resample_to_cartesian(volume: PowerVolume3D, grid: CartesianGridSpec):
    pg = volume.grid
    az, rg, el = voxel_polar_coordinates(grid)
    frac = pg.fractional_index(az, rg, el)
    sizes = pg.spatial_shape

    valid = np.ones(grid.shape, dtype=bool)
    lower, weight = [], []
    for f, n in zip(frac, sizes):
        valid &= (f >= 0) & (f <= n - 1)
        base = np.clip(np.floor(f), 0, max(n - 2, 0)).astype(np.intp)
        w = np.clip(f - base, 0.0, 1.0)
        lower.append(base)
        weight.append(w)

    v = volume.values
    ia, ir, ie = (b[valid] for b in lower)
    wa, wr, we = (w[valid] for w in weight)
    # single-bin axes: the upper neighbour is the bin itself (weight is 0 anyway)
    ja, jr, je = (np.minimum(i + 1, n - 1) for i, n in zip((ia, ir, ie), sizes))
    out = np.zeros(grid.shape)
    out[valid] = (
        v[ia, ir, ie] * (1 - wa) * (1 - wr) * (1 - we)
        + v[ja, ir, ie] * wa * (1 - wr) * (1 - we)
        + v[ia, jr, ie] * (1 - wa) * wr * (1 - we)
        + v[ia, ir, je] * (1 - wa) * (1 - wr) * we
        + v[ja, jr, ie] * wa * wr * (1 - we)
        + v[ja, ir, je] * wa * (1 - wr) * we
        + v[ia, jr, je] * (1 - wa) * wr * we
        + v[ja, jr, je] * wa * wr * we
    )
    return CartesianVoxelVolume(grid, out, valid)


def cartesian_percentile_mask(voxels: CartesianVoxelVolume, r):
    if not voxels.valid.any():
        raise DomainError("no valid voxels to filter")
    threshold = percentile_of(voxels.values[voxels.valid], r)
    return voxels.valid & (voxels.values >= threshold)


def filter_cartesian_percentile(voxels: CartesianVoxelVolume, r, frame_id=""):
    mask = cartesian_percentile_mask(voxels, r)
    ix, iy, iz = np.nonzero(mask)
    g = voxels.grid
    return PointCloud.from_columns(
        g.centers(0)[ix], g.centers(1)[iy], g.centers(2)[iz],
        voxels.values[ix, iy, iz], frame_id,
    )


# -- CVOX container ---------------------------------------------------------

def encode_cvox(voxels: CartesianVoxelVolume) -> bytes:
    g = voxels.grid
    header = MAGIC_CVOX + struct.pack(
        "<H3I9d", _container.VERSION, *g.shape,
        *g.x_bounds, *g.y_bounds, *g.z_bounds, *g.voxel_size,
    )
    return (
        header
        + voxels.values.astype("<f4").tobytes(order="C")
        + voxels.valid.astype(np.uint8).tobytes(order="C")
    )


def decode_cvox(data: bytes) -> CartesianVoxelVolume:
    r = _container.Reader(data, "CVOX file")
    r.magic(MAGIC_CVOX)
    r.version()
    shape = r.unpack("3I")
    f = r.unpack("9d")
    grid = CartesianGridSpec(f[0:2], f[2:4], f[4:6], f[6:9])
    if grid.shape != tuple(shape):
        raise FormatError(f"voxel counts {shape} disagree with grid {grid.shape}", 6)
    n = int(np.prod(shape))
    values = np.frombuffer(r.take(4 * n), dtype="<f4").astype(np.float64)
    valid = np.frombuffer(r.take(n), dtype=np.uint8).astype(bool)
    r.finish()
    return CartesianVoxelVolume(grid, values, valid)


def write_cvox(path, voxels):
    _container.atomic_write(path, encode_cvox(voxels))


def read_cvox(path):
    with open(path, "rb") as fh:
        return decode_cvox(fh.read())
