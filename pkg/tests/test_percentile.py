import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from radar4d.cube import PowerVolume3D, RadarTensor4D, power_map
from radar4d.errors import DomainError
from radar4d.percentile import (
    filter_polar_percentile,
    nearest_rank_index,
    percentile_mask,
    percentile_threshold,
)

import oracles
from conftest import make_grid, random_tensor


def _volume(values):
    values = np.asarray(values, dtype=np.float64)
    return PowerVolume3D(make_grid(values.shape + (1,)), values)


class TestThreshold:
    def test_four_values_median(self):
        assert percentile_threshold(_volume(np.array([3, 1, 4, 2.0]).reshape(4, 1, 1)), 50) == 2.0

    def test_extremes(self, rng):
        v = _volume(rng.exponential(size=(4, 5, 3)))
        assert percentile_threshold(v, 0) == v.values.min()
        assert percentile_threshold(v, 100) == v.values.max()

    def test_matches_sort_oracle(self, rng):
        for _ in range(50):
            v = _volume(rng.exponential(size=(3, 4, 5)))
            r = float(rng.uniform(0, 100))
            assert percentile_threshold(v, r) == oracles.nearest_rank_threshold(v.values, r)

    def test_decimal_rank(self):
        # 0.999 * 1e6 is 998999.9999999999 in binary floating point
        assert nearest_rank_index(99.9, 10**6) == 998999
        assert nearest_rank_index(90, 10**6) == 899999

    @pytest.mark.parametrize("r", [-0.1, 100.5, float("nan")])
    def test_bad_percentile(self, r):
        with pytest.raises(DomainError):
            nearest_rank_index(r, 10)

    def test_empty(self):
        with pytest.raises(DomainError):
            nearest_rank_index(50, 0)


class TestFilterPolar:
    def test_r_zero_keeps_everything(self, rng):
        t = random_tensor(rng, (3, 4, 2, 3))
        assert len(filter_polar_percentile(t, 0)) == 24

    def test_constant_volume_keeps_all(self):
        t = RadarTensor4D(make_grid((3, 4, 2, 2)), np.full((3, 4, 2, 2), 5.0))
        for r in (0, 37.5, 99.9, 100):
            assert len(filter_polar_percentile(t, r)) == 24

    def test_points_match_cells(self, rng):
        t = random_tensor(rng, (4, 6, 3, 2))
        cloud = filter_polar_percentile(t, 80)
        mask = oracles.percentile_mask(power_map(t).values, 80)
        assert len(cloud) == mask.sum()
        np.testing.assert_array_equal(
            cloud.power, power_map(t).values[mask].astype(np.float32)
        )
        # kept points lie at their bin-center ranges
        ranges = np.linalg.norm(cloud.xyz.astype(np.float64), axis=1)
        _, ir, _ = np.nonzero(mask)
        np.testing.assert_allclose(ranges, t.grid.range_centers()[ir], rtol=1e-6)

    def test_distinct_count_formula(self, rng):
        values = rng.permutation(2000).astype(np.float64).reshape(10, 20, 10) + 1
        v = _volume(values)
        for r in (0, 12.5, 50, 90, 99.9, 100):
            expected = 2000 - (nearest_rank_index(r, 2000))
            assert percentile_mask(v, r).sum() == expected


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    r1=st.floats(0, 100),
    r2=st.floats(0, 100),
    c=st.sampled_from([0.5, 3.0, 1000.0]),
)
def test_monotone_and_scale_equivariant(seed, r1, r2, c):
    rng = np.random.default_rng(seed)
    # small integer powers force plenty of ties
    v = _volume(rng.integers(0, 6, size=(4, 5, 3)).astype(np.float64))
    lo, hi = sorted((r1, r2))
    m_lo, m_hi = percentile_mask(v, lo), percentile_mask(v, hi)
    assert not (m_hi & ~m_lo).any()
    np.testing.assert_array_equal(percentile_mask(v.scaled(c), hi), m_hi)
