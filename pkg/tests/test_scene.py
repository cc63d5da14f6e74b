import numpy as np
import pytest
import yaml

from radar4d.cube import encode_4drt
from radar4d.errors import ConfigError
from radar4d.scene import (
    Scatterer,
    SceneConfig,
    generate_4drt,
    load_scene,
    random_scene,
    scene_from_dict,
    scene_to_dict,
)

from conftest import make_grid

GRID = make_grid((8, 20, 4, 6))


def _center(grid, ia, ir, ie, idop):
    return dict(
        azimuth=float(grid.azimuth_centers()[ia]),
        range=float(grid.range_centers()[ir]),
        elevation=float(grid.elevation_centers()[ie]),
        doppler=float(grid.doppler_centers()[idop]),
    )


def test_empty_scene_is_zero():
    t = generate_4drt(SceneConfig(), GRID)
    assert t.values.shape == GRID.shape and not t.values.any()


def test_impulse():
    s = Scatterer(amplitude=7.0, spread=0.0, **_center(GRID, 3, 11, 2, 4))
    v = generate_4drt(SceneConfig([s]), GRID).values
    assert np.count_nonzero(v) == 1
    assert v[3, 11, 2, 4] == 7.0


def test_noise_mean_statistics():
    grid = make_grid((10, 100, 10, 10))
    v = generate_4drt(SceneConfig(noise_mean=1.0, seed=99), grid).values.astype(np.float64)
    n = v.size
    # exponential(1): std of the sample mean is 1 / sqrt(n)
    assert abs(v.mean() - 1.0) < 3.0 / np.sqrt(n)


def test_linearity_without_noise():
    a = Scatterer(amplitude=3.0, spread=(1.0, 2.0, 0.5, 1.0), **_center(GRID, 2, 5, 1, 3))
    b = Scatterer(amplitude=9.0, spread=(0.5, 1.0, 1.0, 0.0), **_center(GRID, 5, 8, 2, 2))
    both = generate_4drt(SceneConfig([a, b]), GRID).values
    parts = generate_4drt(SceneConfig([a]), GRID).values + generate_4drt(SceneConfig([b]), GRID).values
    np.testing.assert_allclose(both, parts, rtol=1e-6, atol=1e-12)


def test_deterministic_bytes():
    scene = random_scene(GRID, 3, seed=5)
    assert encode_4drt(generate_4drt(scene, GRID)) == encode_4drt(generate_4drt(scene, GRID))
    other = SceneConfig(scene.scatterers, scene.noise_mean, seed=6)
    assert encode_4drt(generate_4drt(scene, GRID)) != encode_4drt(generate_4drt(other, GRID))


def test_scatterer_outside_grid():
    s = Scatterer(range=1000.0, azimuth=0.0)
    with pytest.raises(ConfigError, match="range"):
        generate_4drt(SceneConfig([s]), GRID)


@pytest.mark.parametrize("kwargs", [dict(amplitude=0.0), dict(spread=-1.0), dict(spread=(1, 2))])
def test_scatterer_validation(kwargs):
    with pytest.raises(ConfigError):
        Scatterer(range=1.0, azimuth=0.0, **kwargs)


def test_scene_file_round_trip(tmp_path):
    scene = random_scene(GRID, 4, seed=3)
    path = tmp_path / "scene.yaml"
    path.write_text(yaml.safe_dump(scene_to_dict(scene, GRID)))
    back, grid = load_scene(path)
    assert grid == GRID
    assert back == scene


def test_scene_file_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="colour"):
        scene_from_dict({"scatterers": [{"range": 1.0, "azimuth": 0.0, "colour": 1}]})
