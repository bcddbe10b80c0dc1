import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdfnet import oracles
from hdfnet.errors import ContractViolation
from hdfnet.tensor import (ConvParams, activation, avg_pool, avg_pool_backward, conv2d, conv2d_backward,
                           resize_bilinear, resize_bilinear_backward, sigmoid, upsample2x)


def params(rng, out_ch, in_ch, k, **kw):
    return ConvParams(rng.standard_normal((out_ch, in_ch, k, k)), rng.standard_normal(out_ch), **kw)


def test_conv_identity_1x1():
    x = np.ones((1, 1, 3, 3))
    p = ConvParams(np.ones((1, 1, 1, 1)), np.zeros(1))
    np.testing.assert_array_equal(conv2d(x, p), x)


def test_conv_zero_weights(rng):
    x = rng.standard_normal((2, 3, 5, 4))
    p = ConvParams(np.zeros((4, 3, 3, 3)), np.zeros(4), padding=1)
    out = conv2d(x, p)
    assert out.shape == (2, 4, 5, 4)
    assert not out.any()


def test_conv_matches_naive_loops(rng):
    x = rng.standard_normal((1, 2, 5, 5))
    p = params(rng, 3, 2, 3, padding=1)
    np.testing.assert_allclose(conv2d(x, p), oracles.conv2d_naive(x, p.weight, p.bias, 1, 1, 1), atol=1e-12, rtol=0)


@pytest.mark.parametrize("stride,pad,dil", [(2, 0, 1), (1, 2, 2), (2, 1, 3), (3, 2, 1)])
def test_conv_geometry_matches_naive(rng, stride, pad, dil):
    x = rng.standard_normal((2, 3, 9, 8))
    p = params(rng, 2, 3, 3, stride=stride, padding=pad, dilation=dil)
    out = conv2d(x, p)
    span = dil * 2 + 1
    assert out.shape == (2, 2, (9 + 2 * pad - span) // stride + 1, (8 + 2 * pad - span) // stride + 1)
    np.testing.assert_allclose(out, oracles.conv2d_naive(x, p.weight, p.bias, stride, pad, dil), atol=1e-12, rtol=0)


def test_conv_channel_mismatch_names_dimension(rng):
    with pytest.raises(ContractViolation, match="channel"):
        conv2d(rng.standard_normal((1, 2, 4, 4)), params(rng, 1, 3, 3))


def test_conv_output_too_small(rng):
    with pytest.raises(ContractViolation, match="height"):
        conv2d(rng.standard_normal((1, 1, 2, 8)), params(rng, 1, 1, 3))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dil=st.integers(1, 4), k=st.sampled_from([1, 2, 3]))
def test_dilation_equals_inflated_kernel(seed, dil, k):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((1, 2, 10, 9))
    pad = dil * (k - 1) // 2
    p = params(rng, 2, 2, k, padding=pad, dilation=dil)
    inflated = ConvParams(oracles.inflate_kernel(p.weight, dil), p.bias, padding=pad)
    np.testing.assert_allclose(conv2d(x, p), conv2d(x, inflated), atol=1e-12, rtol=0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_conv_is_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 1, 2, 6, 6))
    p = ConvParams(rng.standard_normal((3, 2, 3, 3)), np.zeros(3), padding=1)
    np.testing.assert_allclose(conv2d(a * x + b * y, p), a * conv2d(x, p) + b * conv2d(y, p), atol=1e-12, rtol=0)


def test_conv_backward_is_adjoint(rng):
    x = rng.standard_normal((2, 3, 7, 6))
    p = params(rng, 4, 3, 3, stride=2, padding=1, dilation=2)
    u = rng.standard_normal(conv2d(x, p).shape)
    gx, gw, gb = conv2d_backward(u, x, p)
    p0 = ConvParams(p.weight, np.zeros(4), p.stride, p.padding, p.dilation)
    assert np.isclose(np.sum(conv2d(x, p0) * u), np.sum(x * gx), rtol=1e-12)
    assert np.isclose(np.sum(conv2d(x, p0) * u), np.sum(p.weight * gw), rtol=1e-12)
    np.testing.assert_allclose(gb, u.sum(axis=(0, 2, 3)))


@pytest.mark.parametrize("v", [0.0, 1.0, 0.37, -2.5])
def test_avg_pool_constant(v):
    x = np.full((1, 1, 6, 7), v)
    np.testing.assert_allclose(avg_pool(x, 5, 1, 2), x, rtol=1e-15, atol=0)


def test_avg_pool_single_pixel():
    assert avg_pool(np.full((1, 1, 1, 1), 0.8), 5, 1, 2)[0, 0, 0, 0] == 0.8


def test_avg_pool_matches_naive(rng):
    x = rng.standard_normal((1, 1, 7, 7))
    np.testing.assert_allclose(avg_pool(x, 5, 1, 2), oracles.avg_pool_naive(x, 5, 1, 2), atol=1e-12, rtol=0)


def test_avg_pool_rejects_bad_window():
    with pytest.raises(ContractViolation):
        avg_pool(np.zeros((1, 1, 4, 4)), 0)


def test_avg_pool_backward_adjoint(rng):
    x = rng.standard_normal((1, 2, 8, 8))
    for k, s, pad in [(5, 1, 2), (2, 2, 0)]:
        u = rng.standard_normal(avg_pool(x, k, s, pad).shape)
        assert np.isclose(np.sum(avg_pool(x, k, s, pad) * u), np.sum(x * avg_pool_backward(u, x, k, s, pad)))


def test_upsample_constant_and_degenerate():
    np.testing.assert_array_equal(upsample2x(np.full((1, 2, 3, 4), 0.3)), np.full((1, 2, 6, 8), 0.3))
    np.testing.assert_array_equal(upsample2x(np.full((1, 1, 1, 1), 7.0)), np.full((1, 1, 2, 2), 7.0))


def test_upsample_hand_computed():
    # half-pixel centres: rows/cols sample at -0.25 (clamped), 0.25, 0.75, 1.25 (clamped)
    expected = np.array([[0.0, 0.25, 0.75, 1.0],
                         [0.5, 0.75, 1.25, 1.5],
                         [1.5, 1.75, 2.25, 2.5],
                         [2.0, 2.25, 2.75, 3.0]])
    out = upsample2x(np.array([[[[0.0, 1.0], [2.0, 3.0]]]]))
    np.testing.assert_allclose(out[0, 0], expected, atol=1e-15)
    np.testing.assert_allclose(out[0, 0], oracles.bilinear_naive(np.array([[0.0, 1.0], [2.0, 3.0]]), 4, 4), atol=1e-15)


def test_resize_backward_adjoint(rng):
    x = rng.standard_normal((1, 1, 5, 3))
    u = rng.standard_normal((1, 1, 11, 7))
    assert np.isclose(np.sum(resize_bilinear(x, 11, 7) * u), np.sum(x * resize_bilinear_backward(u, 5, 3)))


def test_activations():
    assert activation(np.array([-1.0]), "relu")[0] == 0.0
    assert activation(np.array([2.0]), "relu")[0] == 2.0
    assert activation(np.array([0.0]), "sigmoid")[0] == 0.5
    with pytest.raises(ContractViolation):
        activation(np.zeros(1), "tanh")


@given(st.lists(st.floats(-30, 30), min_size=1, max_size=20))
def test_sigmoid_symmetry(xs):
    x = np.array(xs)
    np.testing.assert_allclose(sigmoid(x) + sigmoid(-x), 1.0, atol=1e-12)


def test_sigmoid_open_interval():
    y = sigmoid(np.array([-800.0, -50.0, 0.0, 50.0, 800.0]))
    assert np.all(y > 0) and np.all(y < 1)
    assert np.all(np.isfinite(y))
