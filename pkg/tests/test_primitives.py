import math

import numpy as np
import pytest

from radar4d.errors import DimensionError
from radar4d.fusion import primitives as F

import oracles

RTOL = 1e-5


@pytest.mark.parametrize(
    "c_in,c_out,k,stride,padding,groups",
    [
        (4, 6, 3, 1, 1, 1),
        (3, 5, 1, 1, 0, 1),
        (8, 8, 7, 1, 3, 8),
        (4, 6, 3, 2, 1, 2),
        (6, 4, 2, 2, 0, 1),
    ],
)
def test_conv2d_matches_loops(rng, c_in, c_out, k, stride, padding, groups):
    x = rng.normal(size=(c_in, 16, 16))
    w = rng.normal(size=(c_out, c_in // groups, k, k))
    b = rng.normal(size=c_out)
    got = F.conv2d(x, w, b, stride=stride, padding=padding, groups=groups)
    np.testing.assert_allclose(got, oracles.conv2d(x, w, b, stride, padding, groups), rtol=RTOL, atol=1e-12)


def test_conv2d_identity_kernel(rng):
    x = rng.normal(size=(5, 6, 7))
    w = np.eye(5)[:, :, None, None]
    np.testing.assert_array_equal(F.conv2d(x, w), x)


def test_conv2d_ones_on_constant():
    out = F.conv2d(np.full((1, 8, 8), 2.0), np.ones((1, 1, 3, 3)), padding=1)
    np.testing.assert_array_equal(out[0, 1:-1, 1:-1], 18.0)
    assert out[0, 0, 0] == 8.0  # zero padding at the corner


def test_replicate_padding_keeps_constant():
    out = F.conv2d(np.full((2, 6, 6), 1.5), np.arange(98.0).reshape(1, 2, 7, 7), padding=3,
                   padding_mode="replicate")
    assert np.all(out == out[0, 0, 0])


def test_conv2d_shape_errors(rng):
    with pytest.raises(DimensionError):
        F.conv2d(rng.normal(size=(3, 4, 4)), rng.normal(size=(2, 4, 1, 1)))
    with pytest.raises(DimensionError):
        F.conv2d(rng.normal(size=(3, 4, 4)), rng.normal(size=(2, 3, 5, 5)))
    with pytest.raises(DimensionError):
        F.conv2d(rng.normal(size=(4, 4)), rng.normal(size=(2, 3, 1, 1)))


@pytest.mark.parametrize("k,stride,padding", [(2, 2, 0), (3, 2, 1), (3, 1, 0), (4, 2, 1)])
def test_conv_transpose2d_matches_loops(rng, k, stride, padding):
    x = rng.normal(size=(5, 8, 8))
    w = rng.normal(size=(5, 3, k, k))
    b = rng.normal(size=3)
    got = F.conv_transpose2d(x, w, b, stride=stride, padding=padding)
    np.testing.assert_allclose(got, oracles.conv_transpose2d(x, w, b, stride, padding), rtol=RTOL, atol=1e-12)


def test_conv_transpose_is_adjoint(rng):
    # <conv(x), y> == <x, conv_transpose(y)> for the same weights
    x = rng.normal(size=(4, 7, 7))
    w = rng.normal(size=(6, 4, 3, 3))
    y = rng.normal(size=(6, 4, 4))
    lhs = np.sum(F.conv2d(x, w, stride=2, padding=1) * y)
    rhs = np.sum(x * F.conv_transpose2d(y, w, stride=2, padding=1))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_batch_norm(rng):
    x = rng.normal(size=(8, 16, 16))
    stats = [rng.normal(size=8), rng.uniform(0.5, 2, 8), rng.normal(size=8), rng.normal(size=8)]
    np.testing.assert_allclose(
        F.batch_norm_inference(x, *stats), oracles.batch_norm(x, *stats), rtol=RTOL
    )
    with pytest.raises(DimensionError):
        F.batch_norm_inference(x, np.zeros(4), np.ones(4))


def test_layer_norm(rng):
    x = rng.normal(size=(8, 16, 16))
    g, b = rng.normal(size=8), rng.normal(size=8)
    np.testing.assert_allclose(F.layer_norm(x, g, b), oracles.layer_norm(x, g, b), rtol=RTOL, atol=1e-12)


def test_layer_norm_constant_vector():
    out = F.layer_norm(np.full((6, 2, 2), 3.0))
    np.testing.assert_array_equal(out, 0.0)


def test_pools(rng):
    x = rng.normal(size=(8, 16, 16))
    gavg, gmax, cavg, cmax = oracles.pools(x)
    np.testing.assert_allclose(F.global_avg_pool(x), gavg, rtol=RTOL)
    np.testing.assert_array_equal(F.global_max_pool(x), gmax)
    np.testing.assert_allclose(F.channel_avg_pool(x), cavg, rtol=RTOL)
    np.testing.assert_array_equal(F.channel_max_pool(x), cmax)


def test_activations():
    assert F.relu(-1.0) == 0.0 and F.relu(2.0) == 2.0
    assert F.sigmoid(0.0) == 0.5
    assert F.gelu(0.0) == 0.0
    xs = np.linspace(-6, 6, 101)
    np.testing.assert_allclose(
        F.gelu(xs), [0.5 * v * (1 + math.erf(v / math.sqrt(2))) for v in xs], rtol=1e-12, atol=1e-15
    )
    np.testing.assert_allclose(F.sigmoid(xs), [1 / (1 + math.exp(-v)) for v in xs], rtol=1e-12)
