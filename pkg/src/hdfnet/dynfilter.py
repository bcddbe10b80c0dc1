"""Position-specific dilated filtering and the three-branch dynamic dilated pyramid.

A kernel field holds nine weights per position for every channel group:
``raw[n, 9*g + k, h, w]`` with tap index ``k = (l+1)*3 + (m+1)`` for row/col
offsets ``l, m`` in {-1, 0, 1}. A dilation ``d`` spreads the taps to offsets
``l*d, m*d``, which is what a 3x3 kernel with ``d-1`` zeros inserted between
taps would do, without materialising the inflated kernel.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation
from .tensor import ConvParams, check_rank4, conv2d, conv2d_backward, init_conv, relu, relu_backward

TAPS = [(l, m) for l in (-1, 0, 1) for m in (-1, 0, 1)]
DILATIONS = (1, 3, 5)


def branch_dilation(j: int) -> int:
    """Dilation of branch ``j`` (1-based): 1, 3, 5 for footprints 3x3, 7x7, 11x11."""
    if j not in (1, 2, 3):
        raise ContractViolation(f"branch index must be 1, 2 or 3, got {j}")
    return 2 * j - 1


def _kernel_groups(f_r: np.ndarray, kernels: np.ndarray, d: int) -> np.ndarray:
    check_rank4(f_r, "f_r")
    check_rank4(kernels, "kernels")
    if d < 1:
        raise ContractViolation(f"dilation must be positive, got {d}")
    n, c, h, w = f_r.shape
    if kernels.shape[0] != n:
        raise ContractViolation(f"batch mismatch: f_r n={n}, kernels n={kernels.shape[0]}")
    if kernels.shape[2:] != (h, w):
        raise ContractViolation(
            f"spatial mismatch: f_r is {h}x{w}, kernels are {kernels.shape[2]}x{kernels.shape[3]}"
        )
    kc = kernels.shape[1]
    if kc != 9 and kc != 9 * c:
        raise ContractViolation(f"kernel channels must be 9 or 9*C'={9 * c}, got {kc}")
    return kernels.reshape(n, kc // 9, 9, h, w)


def adaptive_conv(f_r: np.ndarray, kernels: np.ndarray, d: int) -> np.ndarray:
    """Filter ``f_r`` with per-position 3x3 kernels at dilation ``d``.

    ``kernels`` has 9 channels (one field shared by every channel of ``f_r``)
    or ``9*C'`` channels (channel ``c`` uses planes ``9c .. 9c+8``).
    """
    kg = _kernel_groups(f_r, kernels, d)
    h, w = f_r.shape[2:]
    fp = np.pad(f_r, ((0, 0), (0, 0), (d, d), (d, d)))
    out = np.zeros_like(f_r)
    for k, (l, m) in enumerate(TAPS):
        r0, c0 = d + l * d, d + m * d
        out += kg[:, :, k] * fp[:, :, r0:r0 + h, c0:c0 + w]
    return out


def adaptive_conv_backward(f_r: np.ndarray, kernels: np.ndarray, d: int, grad_out: np.ndarray
                           ) -> tuple[np.ndarray, np.ndarray]:
    """Returns (grad_f_r, grad_kernels); a shared 9-plane field sums over all channels."""
    kg = _kernel_groups(f_r, kernels, d)
    n, c, h, w = f_r.shape
    shared = kg.shape[1] == 1
    fp = np.pad(f_r, ((0, 0), (0, 0), (d, d), (d, d)))
    gfp = np.zeros_like(fp)
    gk = np.empty_like(kg)
    for k, (l, m) in enumerate(TAPS):
        r0, c0 = d + l * d, d + m * d
        gfp[:, :, r0:r0 + h, c0:c0 + w] += kg[:, :, k] * grad_out
        prod = grad_out * fp[:, :, r0:r0 + h, c0:c0 + w]
        gk[:, :, k] = prod.sum(axis=1, keepdims=True) if shared else prod
    return gfp[:, :, d:d + h, d:d + w], gk.reshape(kernels.shape)


def ktu_split(raw: np.ndarray, group: int) -> np.ndarray:
    """The nine planes of channel group ``group``: ``raw[:, 9g:9g+9]``."""
    check_rank4(raw, "raw")
    if raw.shape[1] % 9:
        raise ContractViolation(f"kernel field channels must be a multiple of 9, got {raw.shape[1]}")
    n_groups = raw.shape[1] // 9
    if not 0 <= group < n_groups:
        raise ContractViolation(f"channel group {group} out of range 0..{n_groups - 1}")
    return raw[:, 9 * group:9 * group + 9]


# ---------------------------------------------------------------------------
# dense blocks (used by the kernel generators and by the transport layer)


@dataclass
class DenseBlockParams:
    layers: list[ConvParams]  # 3x3 conv + relu, each sees input ++ all previous outputs
    proj: ConvParams  # 1x1, linear


def init_dense_block(rng: np.random.Generator, in_ch: int, growth: int, out_ch: int,
                     n_layers: int = 4) -> DenseBlockParams:
    layers = [init_conv(rng, in_ch + i * growth, growth, k=3) for i in range(n_layers)]
    proj = init_conv(rng, in_ch + n_layers * growth, out_ch, k=1)
    return DenseBlockParams(layers, proj)


def dense_block_forward(x: np.ndarray, p: DenseBlockParams) -> tuple[np.ndarray, list]:
    check_rank4(x)
    feats = [x]
    cache = []
    for layer in p.layers:
        inp = np.concatenate(feats, axis=1)
        pre = conv2d(inp, layer)
        cache.append((inp, pre))
        feats.append(relu(pre))
    cat = np.concatenate(feats, axis=1)
    cache.append(cat)
    return conv2d(cat, p.proj), cache


def dense_block_backward(grad_out: np.ndarray, p: DenseBlockParams, cache: list
                         ) -> tuple[np.ndarray, DenseBlockParams]:
    cat = cache[-1]
    g_cat, gw, gb = conv2d_backward(grad_out, cat, p.proj)
    g_proj = ConvParams(gw, gb, p.proj.stride, p.proj.padding, p.proj.dilation)
    bounds = np.cumsum([0] + [cat.shape[1] - sum(l.out_ch for l in p.layers)] + [l.out_ch for l in p.layers])
    # gradient flowing into each of the concatenated feature maps
    g_feats = [g_cat[:, bounds[i]:bounds[i + 1]].copy() for i in range(len(bounds) - 1)]
    g_layers = [None] * len(p.layers)
    for i in reversed(range(len(p.layers))):
        inp, pre = cache[i]
        g_pre = relu_backward(g_feats[i + 1], pre)
        g_inp, gw, gb = conv2d_backward(g_pre, inp, p.layers[i])
        g_layers[i] = ConvParams(gw, gb, p.layers[i].stride, p.layers[i].padding, p.layers[i].dilation)
        for j in range(i + 1):
            g_feats[j] += g_inp[:, bounds[j]:bounds[j + 1]]
    return g_feats[0], DenseBlockParams(g_layers, g_proj)


# ---------------------------------------------------------------------------
# kernel generation


def kgu_forward(f_tm: np.ndarray, p: DenseBlockParams) -> np.ndarray:
    """Kernel field (N, 9*C', H', W') from the mixed features."""
    if f_tm.ndim == 4 and f_tm.shape[1] != p.layers[0].in_ch:
        raise ContractViolation(
            f"channel mismatch: f_Tm has c={f_tm.shape[1]}, kernel generator expects {p.layers[0].in_ch}"
        )
    out, _ = dense_block_forward(f_tm, p)
    return out


@dataclass
class DdpmParams:
    reduce: ConvParams  # 1x1, in_ch -> C'
    kgu: list[DenseBlockParams]  # one per branch, each emitting 9*C' planes
    fuse: ConvParams  # 3x3, 4*C' -> in_ch

    def __post_init__(self):
        c = self.reduce.out_ch
        if len(self.kgu) != 3:
            raise ContractViolation(f"need 3 kernel generators, got {len(self.kgu)}")
        for j, g in enumerate(self.kgu):
            if g.proj.out_ch != 9 * c:
                raise ContractViolation(f"kernel generator {j + 1} emits {g.proj.out_ch} planes, need {9 * c}")
        if self.fuse.in_ch != 4 * c:
            raise ContractViolation(f"fuse expects {self.fuse.in_ch} channels, branches give {4 * c}")

    @property
    def reduced(self) -> int:
        return self.reduce.out_ch


def init_ddpm(rng: np.random.Generator, channels: int = 64, reduced: int = 16, tm_channels: int = 64,
              growth: int = 32) -> DdpmParams:
    reduce = init_conv(rng, channels, reduced, k=1)
    kgu = [init_dense_block(rng, tm_channels, growth, 9 * reduced) for _ in range(3)]
    fuse = init_conv(rng, 4 * reduced, channels, k=3)
    return DdpmParams(reduce, kgu, fuse)


def _ddpm(f_drgb: np.ndarray, f_tm: np.ndarray, p: DdpmParams):
    check_rank4(f_drgb, "f_Drgb")
    check_rank4(f_tm, "f_Tm")
    if f_drgb.shape[0] != f_tm.shape[0]:
        raise ContractViolation(f"batch mismatch: f_Drgb n={f_drgb.shape[0]}, f_Tm n={f_tm.shape[0]}")
    if f_drgb.shape[2:] != f_tm.shape[2:]:
        raise ContractViolation(f"spatial mismatch: f_Drgb {f_drgb.shape[2:]} vs f_Tm {f_tm.shape[2:]}")
    r = conv2d(f_drgb, p.reduce)
    branches, kcaches, fields = [], [], []
    for j, kgu in enumerate(p.kgu, start=1):
        kf, kc = dense_block_forward(f_tm, kgu)
        branches.append(adaptive_conv(r, kf, branch_dilation(j)))
        fields.append(kf)
        kcaches.append(kc)
    cat = np.concatenate([r] + branches, axis=1)
    return conv2d(cat, p.fuse), (r, fields, kcaches, cat)


def ddpm_forward(f_drgb: np.ndarray, f_tm: np.ndarray, p: DdpmParams) -> np.ndarray:
    """fuse(concat(r, B1, B2, B3)) with r = reduce(f_Drgb), Bj = KGUj(f_Tm) applied to r at dilation 2j-1."""
    return _ddpm(f_drgb, f_tm, p)[0]


def ddpm_forward_cached(f_drgb, f_tm, p):
    return _ddpm(f_drgb, f_tm, p)


def ddpm_backward(grad_out: np.ndarray, f_drgb: np.ndarray, f_tm: np.ndarray, p: DdpmParams, cache
                  ) -> tuple[np.ndarray, np.ndarray, DdpmParams]:
    """Returns (grad_f_Drgb, grad_f_Tm, parameter gradients)."""
    r, fields, kcaches, cat = cache
    c = p.reduced
    g_cat, gw, gb = conv2d_backward(grad_out, cat, p.fuse)
    g_fuse = ConvParams(gw, gb, p.fuse.stride, p.fuse.padding, p.fuse.dilation)
    g_r = g_cat[:, :c].copy()
    g_tm = np.zeros_like(f_tm)
    g_kgu = []
    for j, (kgu, kf, kc) in enumerate(zip(p.kgu, fields, kcaches), start=1):
        g_b = g_cat[:, j * c:(j + 1) * c]
        g_rj, g_kf = adaptive_conv_backward(r, kf, branch_dilation(j), g_b)
        g_r += g_rj
        g_tmj, g_block = dense_block_backward(g_kf, kgu, kc)
        g_tm += g_tmj
        g_kgu.append(g_block)
    g_drgb, gw, gb = conv2d_backward(g_r, f_drgb, p.reduce)
    g_reduce = ConvParams(gw, gb, p.reduce.stride, p.reduce.padding, p.reduce.dilation)
    return g_drgb, g_tm, DdpmParams(g_reduce, g_kgu, g_fuse)
