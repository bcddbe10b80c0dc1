import numpy as np
import pytest

from hdfnet import gradcheck, oracles
from hdfnet.errors import ContractViolation
from hdfnet.net import (FEAT, encoder_forward, hdfnet_forward, init_encoder, init_hdfnet, named_arrays,
                        transport_forward)
from hdfnet.dynfilter import init_dense_block


def test_encoder_shapes(rng):
    feats = encoder_forward(rng.random((1, 3, 64, 64)), init_encoder(rng, 3))
    assert feats.f3.shape == (1, 64, 16, 16)
    assert feats.f4.shape == (1, 64, 8, 8)
    assert feats.f5.shape == (1, 64, 4, 4)


def test_encoder_zero_input_zero_bias(rng):
    p = init_encoder(rng, 1)
    for _, arr in named_arrays(p):
        if arr.ndim == 1:
            arr[:] = 0.0
    feats = encoder_forward(np.zeros((2, 1, 32, 32)), p)
    assert not any(feats.level(i).any() for i in (3, 4, 5))


def test_encoder_matches_reference(rng):
    p = init_encoder(rng, 3)
    x = rng.random((1, 3, 32, 32))
    feats = encoder_forward(x, p)
    for i, ref in zip((3, 4, 5), oracles.encoder_reference(x, p)):
        np.testing.assert_allclose(feats.level(i), ref, atol=1e-12, rtol=0)


@pytest.mark.parametrize("shape,dim", [((1, 3, 40, 32), "height"), ((1, 3, 32, 40), "width")])
def test_encoder_rejects_non_multiple_of_16(rng, shape, dim):
    with pytest.raises(ContractViolation, match=dim):
        encoder_forward(np.zeros(shape), init_encoder(rng, 3))


def test_encoder_channel_mismatch(rng):
    with pytest.raises(ContractViolation, match="channel"):
        encoder_forward(np.zeros((1, 1, 32, 32)), init_encoder(rng, 3))


def test_transport(rng):
    p = init_dense_block(rng, 2 * FEAT, 16, FEAT)
    f_rgb, f_d = rng.standard_normal((2, 2, FEAT, 4, 4))
    out = transport_forward(f_rgb, f_d, p)
    assert out.shape == (2, FEAT, 4, 4)
    np.testing.assert_allclose(out, oracles.dense_block_reference(np.concatenate([f_rgb, f_d], axis=1), p),
                               atol=1e-12, rtol=0)
    with pytest.raises(ContractViolation, match="mismatch"):
        transport_forward(f_rgb, f_d[:, :, :2], p)


def test_transport_zero(rng):
    p = init_dense_block(rng, 2 * FEAT, 16, FEAT)
    for _, arr in named_arrays(p):
        if arr.ndim == 1:
            arr[:] = 0.0
    assert not transport_forward(np.zeros((1, FEAT, 3, 3)), np.zeros((1, FEAT, 3, 3)), p).any()


def test_forward_range_and_shape(rng):
    out = hdfnet_forward(rng.random((2, 3, 64, 48)), rng.random((2, 1, 64, 48)), init_hdfnet(0))
    assert out.shape == (2, 1, 64, 48)
    assert np.all(out > 0) and np.all(out < 1)


def test_seeds_give_different_maps(rng):
    rgb, depth = rng.random((1, 3, 32, 32)), rng.random((1, 1, 32, 32))
    assert not np.array_equal(hdfnet_forward(rgb, depth, init_hdfnet(0)), hdfnet_forward(rgb, depth, init_hdfnet(1)))


def test_same_seed_is_deterministic(rng):
    rgb, depth = rng.random((1, 3, 32, 32)), rng.random((1, 1, 32, 32))
    np.testing.assert_array_equal(hdfnet_forward(rgb, depth, init_hdfnet(5)), hdfnet_forward(rgb, depth, init_hdfnet(5)))


def test_depth_changes_prediction(rng):
    p = init_hdfnet(0)
    rgb = rng.random((1, 3, 32, 32))
    a = hdfnet_forward(rgb, rng.random((1, 1, 32, 32)), p)
    b = hdfnet_forward(rgb, rng.random((1, 1, 32, 32)), p)
    assert np.max(np.abs(a - b)) > 0


def test_batch_independence(rng):
    p = init_hdfnet(2)
    rgb, depth = rng.random((3, 3, 32, 32)), rng.random((3, 1, 32, 32))
    batched = hdfnet_forward(rgb, depth, p)
    for k in range(3):
        single = hdfnet_forward(rgb[k:k + 1], depth[k:k + 1], p)
        assert np.max(np.abs(batched[k:k + 1] - single)) <= 1e-12


def test_rgb_depth_disagreement(rng):
    with pytest.raises(ContractViolation):
        hdfnet_forward(np.zeros((1, 3, 32, 32)), np.zeros((1, 1, 32, 48)), init_hdfnet(0))


def test_network_gradient_one_instance():
    checked, worst, _ = gradcheck.net_instance(7)
    assert checked > 50 and worst < 1e-3
