import numpy as np
import pytest

from radar4d.cfar import (
    CfarConfig,
    TlpConfig,
    alpha_for_pfa,
    ca_cfar,
    cfar_mask,
    pfa_for_alpha,
    tlp_mask,
    two_level_preproc,
)
from radar4d.cube import PowerVolume3D, RadarTensor4D, power_map
from radar4d.errors import ConfigError

import oracles
from conftest import make_grid, random_volume


def _vol(values):
    return PowerVolume3D(make_grid(values.shape + (1,)), values)


def _oracle(values, cfg):
    return oracles.cfar_mask(values, cfg.training_cells, cfg.guard_cells, cfg.axes, cfg.scale_alpha)


CONFIGS = [
    CfarConfig(2, 1, 1.5, ("azimuth", "range")),
    CfarConfig((1, 3, 1), (0, 1, 0), 2.0, ("azimuth", "range", "elevation")),
    CfarConfig((2, 4, 1), (1, 2, 0), 3.0, ("range",)),
    CfarConfig((3, 1, 1), (1, 0, 0), 1.2, ("azimuth", "elevation")),
]


def test_window_counts():
    cfg = CfarConfig()
    assert cfg.n_training == 21 * 21 - 5 * 5
    assert CfarConfig(2, 1, 1.0, ("range",)).n_training == 4


def test_alpha_pfa_inverse():
    for n in (4, 16, 416):
        assert pfa_for_alpha(alpha_for_pfa(1e-3, n), n) == pytest.approx(1e-3, rel=1e-10)


def test_uniform_field_empty():
    cfg = CfarConfig(2, 1, 2.0, ("azimuth", "range"))
    assert len(ca_cfar(_vol(np.full((12, 12, 2), 4.0)), cfg)) == 0


@pytest.mark.parametrize("alpha", [0.1, 1.0, 50.0, 1e6])
def test_impulse_detected_alone(alpha):
    values = np.zeros((12, 14, 3))
    values[6, 7, 1] = 9.0
    mask = cfar_mask(_vol(values), CfarConfig(2, 1, alpha, ("azimuth", "range")))
    assert mask.sum() == 1 and mask[6, 7, 1]


@pytest.mark.parametrize("cfg", CONFIGS)
def test_matches_loop_oracle(rng, cfg):
    for _ in range(4):
        v = random_volume(rng, (9, 16, 4))
        np.testing.assert_array_equal(cfar_mask(v, cfg), _oracle(v.values, cfg))


def test_border_cells_never_detected():
    values = np.zeros((10, 10, 1))
    values[0, 5, 0] = values[5, 0, 0] = 100.0
    assert not cfar_mask(_vol(values), CfarConfig(2, 1, 1.0, ("azimuth", "range"))).any()


def test_window_too_large():
    with pytest.raises(ConfigError, match="does not fit"):
        cfar_mask(_vol(np.ones((5, 40, 1))), CfarConfig(2, 1, 1.0, ("azimuth", "range")))


@pytest.mark.parametrize(
    "kwargs",
    [dict(axes=()), dict(axes=("doppler",)), dict(training_cells=0), dict(scale_alpha=-1.0)],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        CfarConfig(**kwargs)


def test_monotone_in_alpha(rng):
    v = random_volume(rng, (16, 24, 2))
    prev = None
    for alpha in (0.5, 1.0, 2.0, 4.0):
        m = cfar_mask(v, CfarConfig(3, 1, alpha, ("azimuth", "range")))
        if prev is not None:
            assert not (m & ~prev).any()
        prev = m


class TestTlp:
    def test_empty_stage_one(self):
        t = RadarTensor4D(make_grid((10, 10, 2, 2)), np.ones((10, 10, 2, 2)))
        cfg = TlpConfig(CfarConfig(2, 1, 2.0, ("azimuth", "range")), 30)
        assert len(two_level_preproc(t, cfg)) == 0

    def test_zero_percentile_is_stage_one(self, rng):
        v = random_volume(rng, (14, 16, 3))
        coarse = CfarConfig(2, 1, 1.3, ("azimuth", "range"))
        np.testing.assert_array_equal(tlp_mask(v, TlpConfig(coarse, 0)), cfar_mask(v, coarse))

    def test_strong_and_weak_ring(self):
        grid = make_grid((16, 20, 2, 1))
        values = np.ones((16, 20, 2))
        values[[4, 6, 8, 10, 11], 8, 0] = np.arange(100.0, 105.0)  # strong ring
        values[4:12:3, 12, 1] = [5.0, 6.0, 7.0]  # weak ring
        v = PowerVolume3D(grid, values)
        coarse = CfarConfig(3, 1, 2.0, ("azimuth", "range"))
        got = tlp_mask(v, TlpConfig(coarse, 50))
        want = oracles.tlp_mask(values, coarse.training_cells, coarse.guard_cells, coarse.axes, 2.0, 50)
        np.testing.assert_array_equal(got, want)
        # nearest-rank median: 3 of 5 survivors kept, 2 of 3
        assert got[:, 8, :].sum() == 3 and got[:, 12, :].sum() == 2

    def test_random_against_oracle(self, rng):
        for _ in range(5):
            v = random_volume(rng, (12, 14, 3))
            coarse = CfarConfig(2, 1, 1.1, ("azimuth", "range"))
            r2 = float(rng.uniform(0, 100))
            want = oracles.tlp_mask(v.values, coarse.training_cells, coarse.guard_cells, coarse.axes, 1.1, r2)
            np.testing.assert_array_equal(tlp_mask(v, TlpConfig(coarse, r2)), want)
