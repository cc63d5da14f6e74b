import numpy as np
import pytest

from radar4d.cartesian import (
    CartesianGridSpec,
    CartesianVoxelVolume,
    cartesian_percentile_mask,
    decode_cvox,
    encode_cvox,
    filter_cartesian_percentile,
    resample_to_cartesian,
    voxel_polar_coordinates,
)
from radar4d.cube import PolarGridSpec, PowerVolume3D
from radar4d.errors import ConfigError, DomainError

import oracles

POLAR = PolarGridSpec(24, 100, 8, 1, (-np.pi / 3, np.pi / 3), (-np.pi / 8, np.pi / 8), 0.0, 0.5)
CART = CartesianGridSpec((-4.0, 40.0), (-12.0, 12.0), (-3.0, 3.0), 1.0)


def _field(fn):
    az, rg, el = np.meshgrid(
        POLAR.azimuth_centers(), POLAR.range_centers(), POLAR.elevation_centers(), indexing="ij"
    )
    return PowerVolume3D(POLAR, fn(az, rg, el))


def test_default_grid_shape():
    assert CartesianGridSpec().shape == (180, 80, 24)


def test_bad_voxel_size():
    with pytest.raises(ConfigError):
        CartesianGridSpec(voxel_size=0.0)


def test_constant_field():
    vox = resample_to_cartesian(_field(lambda a, r, e: np.full_like(r, 3.5)), CART)
    assert vox.valid.sum() > 100
    np.testing.assert_allclose(vox.values[vox.valid], 3.5, rtol=1e-12)


def test_linear_in_range():
    vox = resample_to_cartesian(_field(lambda a, r, e: r), CART)
    _, rg, _ = voxel_polar_coordinates(CART)
    np.testing.assert_allclose(vox.values[vox.valid], rg[vox.valid], rtol=1e-6, atol=1e-9)


def test_affine_field_reproduced():
    fn = lambda a, r, e: 2.0 + 3.0 * a + 0.25 * r - 4.0 * e + 10.0
    vox = resample_to_cartesian(_field(fn), CART)
    az, rg, el = voxel_polar_coordinates(CART)
    want = fn(az, rg, el)[vox.valid]
    np.testing.assert_allclose(vox.values[vox.valid], want, rtol=1e-6)


def test_behind_sensor_invalid():
    vox = resample_to_cartesian(_field(lambda a, r, e: r), CART)
    behind = CART.centers(0) < 0
    assert not vox.valid[behind].any()


def test_validity_is_pure_geometry(rng):
    a = resample_to_cartesian(_field(lambda a, r, e: r), CART)
    b = resample_to_cartesian(PowerVolume3D(POLAR, rng.exponential(size=POLAR.spatial_shape)), CART)
    np.testing.assert_array_equal(a.valid, b.valid)


def test_validity_matches_bin_center_hull():
    vox = resample_to_cartesian(_field(lambda a, r, e: r), CART)
    az, rg, el = voxel_polar_coordinates(CART)
    inside = (
        (az >= POLAR.azimuth_centers()[0]) & (az <= POLAR.azimuth_centers()[-1])
        & (rg >= POLAR.range_centers()[0]) & (rg <= POLAR.range_centers()[-1])
        & (el >= POLAR.elevation_centers()[0]) & (el <= POLAR.elevation_centers()[-1])
    )
    # identical except possibly for voxels within rounding of the hull boundary
    assert (inside != vox.valid).sum() <= 2


def _synthetic(values, valid):
    grid = CartesianGridSpec((0, values.shape[0]), (0, values.shape[1]), (0, values.shape[2]), 1.0)
    return CartesianVoxelVolume(grid, values, valid)


def test_distinct_count(rng):
    shape = (40, 50, 10)
    valid = np.zeros(shape, bool)
    valid.ravel()[rng.choice(valid.size, 10_000, replace=False)] = True
    values = np.zeros(shape)
    values[valid] = rng.permutation(10_000) + 1.0
    vox = _synthetic(values, valid)
    assert len(filter_cartesian_percentile(vox, 90)) == 1001
    assert len(filter_cartesian_percentile(vox, 0)) == 10_000


def test_single_valid_voxel():
    valid = np.zeros((3, 3, 3), bool)
    valid[1, 2, 0] = True
    vox = _synthetic(np.full((3, 3, 3), 2.0), valid)
    cloud = filter_cartesian_percentile(vox, 99.0)
    assert len(cloud) == 1
    np.testing.assert_array_equal(cloud.points[0], [1.5, 2.5, 0.5, 2.0])


def test_no_valid_voxels():
    vox = _synthetic(np.ones((2, 2, 2)), np.zeros((2, 2, 2), bool))
    with pytest.raises(DomainError):
        filter_cartesian_percentile(vox, 50)


def test_invalid_voxels_ignored_by_statistics(rng):
    shape = (6, 6, 6)
    valid = rng.random(shape) < 0.5
    values = rng.exponential(size=shape)
    vox = _synthetic(values, valid)
    want = np.zeros(shape, bool)
    want[valid] = oracles.percentile_mask(values[valid], 70)
    np.testing.assert_array_equal(cartesian_percentile_mask(vox, 70), want)


def test_cvox_round_trip(rng):
    vox = resample_to_cartesian(PowerVolume3D(POLAR, rng.exponential(size=POLAR.spatial_shape)), CART)
    back = decode_cvox(encode_cvox(vox))
    assert back.grid == vox.grid
    np.testing.assert_array_equal(back.valid, vox.valid)
    np.testing.assert_array_equal(back.values, vox.values.astype(np.float32))
