"""Dense NCHW primitives: convolution, pooling, bilinear resizing, activations.

Tensors are plain ``float64`` numpy arrays of rank 4 laid out as
(batch, channels, rows, cols). Every op allocates its output; inputs are
never written to. Backward functions take the upstream gradient plus the
forward inputs and return gradients with the same shapes as those inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

DTYPE = np.float64
_SIGMOID_LO = np.finfo(DTYPE).tiny
_SIGMOID_HI = 1.0 - np.finfo(DTYPE).epsneg


def check_rank4(x: np.ndarray, name: str = "input") -> np.ndarray:
    if x.ndim != 4:
        raise ContractViolation(f"{name} must be rank 4 (n, c, h, w), got shape {x.shape}")
    return x


@dataclass
class ConvParams:
    weight: np.ndarray  # (out_ch, in_ch, k, k)
    bias: np.ndarray  # (out_ch,)
    stride: int = 1
    padding: int = 0
    dilation: int = 1

    def __post_init__(self):
        if self.weight.ndim != 4 or self.weight.shape[2] != self.weight.shape[3]:
            raise ContractViolation(f"weight must be (out_ch, in_ch, k, k), got {self.weight.shape}")
        if self.bias.shape != (self.weight.shape[0],):
            raise ContractViolation(
                f"bias length {self.bias.shape} does not match out_ch={self.weight.shape[0]}"
            )
        if self.stride < 1 or self.dilation < 1 or self.padding < 0:
            raise ContractViolation(
                f"invalid stride/padding/dilation ({self.stride}, {self.padding}, {self.dilation})"
            )

    @property
    def out_ch(self) -> int:
        return self.weight.shape[0]

    @property
    def in_ch(self) -> int:
        return self.weight.shape[1]

    @property
    def k(self) -> int:
        return self.weight.shape[2]


def init_conv(rng: np.random.Generator, in_ch: int, out_ch: int, k: int = 3, padding: int | None = None,
              stride: int = 1, dilation: int = 1) -> ConvParams:
    """Seeded uniform(-s, s) init with s = 1/sqrt(fan_in); 'same' padding by default."""
    if padding is None:
        padding = dilation * (k - 1) // 2
    s = 1.0 / np.sqrt(in_ch * k * k)
    weight = rng.uniform(-s, s, size=(out_ch, in_ch, k, k))
    bias = rng.uniform(-s, s, size=out_ch)
    return ConvParams(weight, bias, stride=stride, padding=padding, dilation=dilation)


def _conv_geometry(x: np.ndarray, p: ConvParams) -> tuple[int, int]:
    check_rank4(x)
    if x.shape[1] != p.in_ch:
        raise ContractViolation(f"channel mismatch: input has c={x.shape[1]}, weights expect in_ch={p.in_ch}")
    span = p.dilation * (p.k - 1) + 1
    ho = (x.shape[2] + 2 * p.padding - span) // p.stride + 1
    wo = (x.shape[3] + 2 * p.padding - span) // p.stride + 1
    if ho < 1:
        raise ContractViolation(f"output height would be {ho} for input h={x.shape[2]}")
    if wo < 1:
        raise ContractViolation(f"output width would be {wo} for input w={x.shape[3]}")
    return ho, wo


def _tap_slices(i: int, j: int, p: ConvParams, ho: int, wo: int) -> tuple[slice, slice]:
    r0, c0 = i * p.dilation, j * p.dilation
    return (slice(r0, r0 + p.stride * (ho - 1) + 1, p.stride),
            slice(c0, c0 + p.stride * (wo - 1) + 1, p.stride))


def _im2col(x: np.ndarray, p: ConvParams, ho: int, wo: int) -> np.ndarray:
    n, c = x.shape[:2]
    k = p.k
    xp = np.pad(x, ((0, 0), (0, 0), (p.padding, p.padding), (p.padding, p.padding)))
    cols = np.empty((n, c, k, k, ho, wo), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            rs, cs = _tap_slices(i, j, p, ho, wo)
            cols[:, :, i, j] = xp[:, :, rs, cs]
    return cols.reshape(n, c * k * k, ho * wo)


def conv2d(x: np.ndarray, p: ConvParams) -> np.ndarray:
    """Cross-correlation with zero padding, stride and dilation."""
    ho, wo = _conv_geometry(x, p)
    n = x.shape[0]
    if p.k == 1 and p.stride == 1 and p.padding == 0:
        cols = x.reshape(n, p.in_ch, -1)
    else:
        cols = _im2col(x, p, ho, wo)
    w2 = p.weight.reshape(p.out_ch, -1)
    out = np.matmul(w2, cols) + p.bias[:, None]
    return out.reshape(n, p.out_ch, ho, wo)


def conv2d_backward(grad_out: np.ndarray, x: np.ndarray, p: ConvParams
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (grad_input, grad_weight, grad_bias)."""
    ho, wo = _conv_geometry(x, p)
    n, c, h, w = x.shape
    k = p.k
    g = grad_out.reshape(n, p.out_ch, ho * wo)
    fast = p.k == 1 and p.stride == 1 and p.padding == 0
    cols = x.reshape(n, c, -1) if fast else _im2col(x, p, ho, wo)
    grad_w = np.einsum("noq,nkq->ok", g, cols).reshape(p.weight.shape)
    grad_b = g.sum(axis=(0, 2))
    gcols = np.matmul(p.weight.reshape(p.out_ch, -1).T, g)
    if fast:
        return gcols.reshape(x.shape), grad_w, grad_b
    gcols = gcols.reshape(n, c, k, k, ho, wo)
    pad = p.padding
    gxp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            rs, cs = _tap_slices(i, j, p, ho, wo)
            gxp[:, :, rs, cs] += gcols[:, :, i, j]
    return gxp[:, :, pad:pad + h, pad:pad + w], grad_w, grad_b


def _pool_taps(x: np.ndarray, k: int, stride: int, pad: int):
    check_rank4(x)
    if k <= 0:
        raise ContractViolation(f"pool window must be positive, got k={k}")
    if stride < 1 or pad < 0:
        raise ContractViolation(f"invalid pool stride={stride} / pad={pad}")
    h, w = x.shape[2:]
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    if ho < 1 or wo < 1:
        raise ContractViolation(f"pool window k={k} does not fit input {h}x{w} with pad={pad}")
    taps = [(slice(i, i + stride * (ho - 1) + 1, stride), slice(j, j + stride * (wo - 1) + 1, stride))
            for i in range(k) for j in range(k)]
    return ho, wo, taps


def _pool_counts(h: int, w: int, k: int, stride: int, pad: int, exclude_border: bool,
                 taps, ho: int, wo: int) -> np.ndarray:
    if not exclude_border:
        return np.full((ho, wo), float(k * k))
    inside = np.pad(np.ones((h, w)), pad)
    counts = np.zeros((ho, wo))
    for rs, cs in taps:
        counts += inside[rs, cs]
    return counts


def avg_pool(x: np.ndarray, k: int, stride: int = 1, pad: int = 0, exclude_border: bool = True) -> np.ndarray:
    """Windowed mean. With ``exclude_border`` the divisor counts only in-bounds elements."""
    ho, wo, taps = _pool_taps(x, k, stride, pad)
    h, w = x.shape[2:]
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    total = np.zeros(x.shape[:2] + (ho, wo), dtype=x.dtype)
    for rs, cs in taps:
        total += xp[:, :, rs, cs]
    return total / _pool_counts(h, w, k, stride, pad, exclude_border, taps, ho, wo)


def avg_pool_backward(grad_out: np.ndarray, x: np.ndarray, k: int, stride: int = 1, pad: int = 0,
                      exclude_border: bool = True) -> np.ndarray:
    ho, wo, taps = _pool_taps(x, k, stride, pad)
    h, w = x.shape[2:]
    g = grad_out / _pool_counts(h, w, k, stride, pad, exclude_border, taps, ho, wo)
    gxp = np.zeros(x.shape[:2] + (h + 2 * pad, w + 2 * pad), dtype=x.dtype)
    for rs, cs in taps:
        gxp[:, :, rs, cs] += g
    return gxp[:, :, pad:pad + h, pad:pad + w]


def interpolation_matrix(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) linear-interpolation weights, half-pixel centres (align_corners=False)."""
    m = np.zeros((n_out, n_in))
    scale = n_in / n_out
    for o in range(n_out):
        src = max((o + 0.5) * scale - 0.5, 0.0)
        i0 = min(int(np.floor(src)), n_in - 1)
        i1 = min(i0 + 1, n_in - 1)
        lam = src - i0
        m[o, i0] += 1.0 - lam
        m[o, i1] += lam
    return m


def resize_bilinear(x: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    check_rank4(x)
    ah = interpolation_matrix(x.shape[2], out_h)
    aw = interpolation_matrix(x.shape[3], out_w)
    return ah @ x @ aw.T


def resize_bilinear_backward(grad_out: np.ndarray, in_h: int, in_w: int) -> np.ndarray:
    ah = interpolation_matrix(in_h, grad_out.shape[2])
    aw = interpolation_matrix(in_w, grad_out.shape[3])
    return ah.T @ grad_out @ aw


def upsample2x(x: np.ndarray) -> np.ndarray:
    check_rank4(x)
    return resize_bilinear(x, 2 * x.shape[2], 2 * x.shape[3])


def upsample2x_backward(grad_out: np.ndarray) -> np.ndarray:
    return resize_bilinear_backward(grad_out, grad_out.shape[2] // 2, grad_out.shape[3] // 2)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(grad_out: np.ndarray, x: np.ndarray) -> np.ndarray:
    return grad_out * (x > 0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(x, dtype=DTYPE)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    # saturated values would round to exactly 0 or 1; keep the open interval
    return np.clip(out, _SIGMOID_LO, _SIGMOID_HI)


def sigmoid_backward(grad_out: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``y`` is the sigmoid output."""
    return grad_out * y * (1.0 - y)


def activation(x: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return relu(x)
    if kind == "sigmoid":
        return sigmoid(x)
    raise ContractViolation(f"unknown activation {kind!r}")
