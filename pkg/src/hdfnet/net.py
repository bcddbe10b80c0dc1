"""Desk-scale two-stream RGB-D network: stub encoders, dense transport layers,
three dynamic pyramids and a top-down decoder producing one saliency map.

Random weights only. ``hdfnet_backward`` exists so the whole pipeline can be
gradient-checked; there is no training loop.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, is_dataclass

import numpy as np

from .dynfilter import (DdpmParams, DenseBlockParams, ddpm_backward, ddpm_forward_cached,
                        dense_block_backward, dense_block_forward, init_ddpm, init_dense_block)
from .errors import ContractViolation
from .tensor import (ConvParams, avg_pool, avg_pool_backward, check_rank4, conv2d, conv2d_backward,
                     init_conv, relu, relu_backward, resize_bilinear, resize_bilinear_backward, sigmoid,
                     sigmoid_backward, upsample2x, upsample2x_backward)

STAGE_CHANNELS = (16, 32, 64, 64, 64)
FEAT = 64
LEVELS = (3, 4, 5)


@dataclass
class EncoderParams:
    stages: list[ConvParams]  # 3x3 conv + relu; stages 2..5 start with a 2x average downsample
    reduce: list[ConvParams]  # 1x1 to FEAT for stages 3, 4, 5


@dataclass
class StreamFeatures:
    f3: np.ndarray
    f4: np.ndarray
    f5: np.ndarray

    def level(self, i: int) -> np.ndarray:
        return getattr(self, f"f{i}")


@dataclass
class HdfnetParams:
    rgb_encoder: EncoderParams
    depth_encoder: EncoderParams
    transport: list[DenseBlockParams]  # for levels 3, 4, 5
    ddpm: list[DdpmParams]  # for levels 3, 4, 5
    decoder: list[ConvParams]  # 3x3 refinement after levels 3, 4, 5
    head: ConvParams  # 1x1 to one channel


def init_encoder(rng: np.random.Generator, in_ch: int) -> EncoderParams:
    stages, prev = [], in_ch
    for c in STAGE_CHANNELS:
        stages.append(init_conv(rng, prev, c, k=3))
        prev = c
    reduce = [init_conv(rng, STAGE_CHANNELS[i - 1], FEAT, k=1) for i in LEVELS]
    return EncoderParams(stages, reduce)


def init_hdfnet(seed: int = 0) -> HdfnetParams:
    rng = np.random.default_rng(seed)
    return HdfnetParams(
        rgb_encoder=init_encoder(rng, 3),
        depth_encoder=init_encoder(rng, 1),
        transport=[init_dense_block(rng, 2 * FEAT, 16, FEAT) for _ in LEVELS],
        ddpm=[init_ddpm(rng) for _ in LEVELS],
        decoder=[init_conv(rng, FEAT, FEAT, k=3) for _ in LEVELS],
        head=init_conv(rng, FEAT, 1, k=1),
    )


def _check_divisible(x: np.ndarray):
    check_rank4(x)
    h, w = x.shape[2:]
    if h % 16:
        raise ContractViolation(f"input height {h} is not divisible by 16")
    if w % 16:
        raise ContractViolation(f"input width {w} is not divisible by 16")


def _encoder(image: np.ndarray, p: EncoderParams):
    _check_divisible(image)
    if image.shape[1] != p.stages[0].in_ch:
        raise ContractViolation(f"channel mismatch: image has c={image.shape[1]}, encoder expects {p.stages[0].in_ch}")
    cache, outs, x = [], [], image
    for s, conv in enumerate(p.stages):
        pooled_from = None
        if s > 0:
            pooled_from = x
            x = avg_pool(x, 2, stride=2, pad=0)
        pre = conv2d(x, conv)
        cache.append((pooled_from, x, pre))
        x = relu(pre)
        outs.append(x)
    feats = StreamFeatures(*(conv2d(outs[i - 1], r) for i, r in zip(LEVELS, p.reduce)))
    return feats, (cache, outs)


def encoder_forward(image: np.ndarray, p: EncoderParams) -> StreamFeatures:
    """f3, f4, f5 at 1/4, 1/8, 1/16 resolution, each reduced to 64 channels."""
    return _encoder(image, p)[0]


def _encoder_backward(g_feats: StreamFeatures, image, p: EncoderParams, enc_cache):
    cache, outs = enc_cache
    g_outs = [np.zeros_like(o) for o in outs]
    g_reduce = []
    for i, r in zip(LEVELS, p.reduce):
        gx, gw, gb = conv2d_backward(g_feats.level(i), outs[i - 1], r)
        g_outs[i - 1] += gx
        g_reduce.append(ConvParams(gw, gb, r.stride, r.padding, r.dilation))
    g_stages = [None] * len(p.stages)
    g = None
    for s in reversed(range(len(p.stages))):
        pooled_from, x, pre = cache[s]
        g_out = g_outs[s] if g is None else g_outs[s] + g
        gx, gw, gb = conv2d_backward(relu_backward(g_out, pre), x, p.stages[s])
        conv = p.stages[s]
        g_stages[s] = ConvParams(gw, gb, conv.stride, conv.padding, conv.dilation)
        g = avg_pool_backward(gx, pooled_from, 2, stride=2, pad=0) if s > 0 else gx
    return g, EncoderParams(g_stages, g_reduce)


def transport_forward(f_rgb: np.ndarray, f_d: np.ndarray, p: DenseBlockParams) -> np.ndarray:
    """Mixed features: dense block over the channel concatenation of both streams."""
    check_rank4(f_rgb, "f_rgb")
    check_rank4(f_d, "f_d")
    if f_rgb.shape != f_d.shape:
        raise ContractViolation(f"stream shape mismatch: {f_rgb.shape} vs {f_d.shape}")
    return dense_block_forward(np.concatenate([f_rgb, f_d], axis=1), p)[0]


def _forward(rgb: np.ndarray, depth: np.ndarray, p: HdfnetParams):
    _check_divisible(rgb)
    _check_divisible(depth)
    if rgb.shape[0] != depth.shape[0] or rgb.shape[2:] != depth.shape[2:]:
        raise ContractViolation(f"rgb {rgb.shape} and depth {depth.shape} disagree in batch or size")
    f_rgb, rgb_cache = _encoder(rgb, p.rgb_encoder)
    f_d, d_cache = _encoder(depth, p.depth_encoder)
    tm, tm_cache = {}, {}
    for idx, i in enumerate(LEVELS):
        cat = np.concatenate([f_rgb.level(i), f_d.level(i)], axis=1)
        tm[i], tm_cache[i] = dense_block_forward(cat, p.transport[idx])
    steps = []
    x = f_rgb.f5
    for i in reversed(LEVELS):
        idx = LEVELS.index(i)
        m, dcache = ddpm_forward_cached(x, tm[i], p.ddpm[idx])
        if i > LEVELS[0]:
            merged = upsample2x(m) + f_rgb.level(i - 1)
        else:
            merged = m
        pre = conv2d(merged, p.decoder[idx])
        steps.append((i, x, dcache, merged, pre))
        x = relu(pre)
    logits = conv2d(x, p.head)
    prob = sigmoid(logits)
    out = resize_bilinear(prob, rgb.shape[2], rgb.shape[3])
    cache = (f_rgb, rgb_cache, f_d, d_cache, tm, tm_cache, steps, x, prob)
    return out, cache


def hdfnet_forward(rgb: np.ndarray, depth: np.ndarray, p: HdfnetParams) -> np.ndarray:
    """Prediction map (N, 1, H, W) with every value in (0, 1)."""
    return _forward(rgb, depth, p)[0]


def hdfnet_forward_cached(rgb, depth, p):
    return _forward(rgb, depth, p)


def hdfnet_backward(grad_out: np.ndarray, rgb: np.ndarray, depth: np.ndarray, p: HdfnetParams, cache
                    ) -> tuple[np.ndarray, np.ndarray, HdfnetParams]:
    """Returns (grad_rgb, grad_depth, parameter gradients) for upstream ``grad_out``."""
    f_rgb, rgb_cache, f_d, d_cache, tm, tm_cache, steps, x_last, prob = cache
    g_prob = resize_bilinear_backward(grad_out, prob.shape[2], prob.shape[3])
    g_logits = sigmoid_backward(g_prob, prob)
    g_x, gw, gb = conv2d_backward(g_logits, x_last, p.head)
    g_head = ConvParams(gw, gb, p.head.stride, p.head.padding, p.head.dilation)

    g_frgb = {i: np.zeros_like(f_rgb.level(i)) for i in LEVELS}
    g_tm = {}
    g_decoder, g_ddpm = [None] * 3, [None] * 3
    for i, x_in, dcache, merged, pre in reversed(steps):
        idx = LEVELS.index(i)
        dec = p.decoder[idx]
        g_merged, gw, gb = conv2d_backward(relu_backward(g_x, pre), merged, dec)
        g_decoder[idx] = ConvParams(gw, gb, dec.stride, dec.padding, dec.dilation)
        if i > LEVELS[0]:
            g_frgb[i - 1] += g_merged
            g_m = upsample2x_backward(g_merged)
        else:
            g_m = g_merged
        g_x, g_tm[i], g_ddpm[idx] = ddpm_backward(g_m, x_in, tm[i], p.ddpm[idx], dcache)
    g_frgb[5] += g_x

    g_fd = {}
    g_transport = [None] * 3
    for idx, i in enumerate(LEVELS):
        g_cat, g_transport[idx] = dense_block_backward(g_tm[i], p.transport[idx], tm_cache[i])
        g_frgb[i] += g_cat[:, :FEAT]
        g_fd[i] = g_cat[:, FEAT:]
    g_rgb, g_rgb_enc = _encoder_backward(StreamFeatures(*(g_frgb[i] for i in LEVELS)), rgb, p.rgb_encoder, rgb_cache)
    g_depth, g_d_enc = _encoder_backward(StreamFeatures(*(g_fd[i] for i in LEVELS)), depth, p.depth_encoder, d_cache)
    grads = HdfnetParams(g_rgb_enc, g_d_enc, g_transport, g_ddpm, g_decoder, g_head)
    return g_rgb, g_depth, grads


def named_arrays(obj, prefix: str = ""):
    """Yield (dotted_name, array) for every ndarray leaf of a parameter record."""
    if isinstance(obj, np.ndarray):
        yield prefix, obj
    elif isinstance(obj, (list, tuple)):
        for i, item in enumerate(obj):
            yield from named_arrays(item, f"{prefix}[{i}]")
    elif is_dataclass(obj):
        for f in fields(obj):
            yield from named_arrays(getattr(obj, f.name), f"{prefix}.{f.name}" if prefix else f.name)


def relu_preactivations(cache) -> list[np.ndarray]:
    """Every pre-activation feeding a ReLU in one forward pass (for kink detection)."""
    f_rgb, rgb_cache, f_d, d_cache, tm, tm_cache, steps, x, prob = cache
    pres = [pre for _, _, pre in rgb_cache[0]] + [pre for _, _, pre in d_cache[0]]
    for dense in tm_cache.values():
        pres += [pre for _, pre in dense[:-1]]
    for _, _, dcache, _, pre in steps:
        pres += ddpm_preactivations(dcache)
        pres.append(pre)
    return pres


def ddpm_preactivations(dcache) -> list[np.ndarray]:
    _, _, kcaches, _ = dcache
    return [pre for dense in kcaches for _, pre in dense[:-1]]
