import numpy as np
import pytest

from radar4d.cube import PolarGridSpec, PowerVolume3D, RadarTensor4D

ACCEPTANCE_LINES = []


def make_grid(shape, range_start=0.0, range_step=0.4):
    a, r, e, d = shape
    return PolarGridSpec(
        a, r, e, d,
        azimuth_bounds=(-np.pi / 3, np.pi / 3),
        elevation_bounds=(-np.pi / 8, np.pi / 8),
        range_start=range_start, range_step=range_step, doppler_step=0.5,
    )


def random_tensor(rng, shape):
    return RadarTensor4D(make_grid(shape), rng.exponential(1.0, size=shape).astype(np.float32))


def random_volume(rng, shape):
    return PowerVolume3D(make_grid(shape + (1,)), rng.exponential(1.0, size=shape))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
