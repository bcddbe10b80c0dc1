"""Hybrid enhanced loss: BCE + edge-band L1 + normalised fore/background region terms.

All functions take a prediction ``P`` in the open interval (0, 1) and a
ground truth ``G`` in [0, 1], both shaped (N, 1, H, W), and return the loss
value together with its gradient with respect to ``P``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .tensor import avg_pool, check_rank4

EDGE_EPS = 1e-6
EDGE_WINDOW = 5


@dataclass
class LossValue:
    value: float
    grad: np.ndarray


def _check(p: np.ndarray, g: np.ndarray, open_interval: bool = True):
    check_rank4(p, "P")
    check_rank4(g, "G")
    if p.shape != g.shape:
        raise ContractViolation(f"P shape {p.shape} does not match G shape {g.shape}")
    if open_interval and (np.any(p <= 0.0) or np.any(p >= 1.0)):
        raise ContractViolation("P must lie strictly inside (0, 1)")


def bce_loss(p: np.ndarray, g: np.ndarray) -> LossValue:
    _check(p, g)
    count = p.size
    value = -np.sum(g * np.log(p) + (1.0 - g) * np.log1p(-p)) / count
    grad = -(g / p - (1.0 - g) / (1.0 - p)) / count
    return LossValue(float(value), grad)


def edge_mask(g: np.ndarray) -> np.ndarray:
    """1 where G differs from its 5x5 border-excluded local mean, else 0."""
    check_rank4(g, "G")
    pooled = avg_pool(g, EDGE_WINDOW, stride=1, pad=EDGE_WINDOW // 2, exclude_border=True)
    return (np.abs(g - pooled) > EDGE_EPS).astype(g.dtype)


def eel_loss(p: np.ndarray, g: np.ndarray) -> LossValue:
    _check(p, g)
    n = p.shape[0]
    e = edge_mask(g)
    support = e.sum(axis=(1, 2, 3), keepdims=True)
    denom = np.where(support > 0, support, 1.0)
    per_sample = (e * np.abs(p - g)).sum(axis=(1, 2, 3), keepdims=True) / denom
    grad = e * np.sign(p - g) / denom / n
    return LossValue(float(per_sample.sum() / n), grad)


def rel_loss(p: np.ndarray, g: np.ndarray) -> LossValue:
    _check(p, g)
    n = p.shape[0]
    fg = g.sum(axis=(1, 2, 3), keepdims=True)
    bg = (1.0 - g).sum(axis=(1, 2, 3), keepdims=True)
    # empty class in a sample: its term is defined as 0
    fg_inv = np.where(fg > 0, 1.0 / np.where(fg > 0, fg, 1.0), 0.0)
    bg_inv = np.where(bg > 0, 1.0 / np.where(bg > 0, bg, 1.0), 0.0)
    l_f = (g - g * p).sum(axis=(1, 2, 3), keepdims=True) * fg_inv
    l_b = ((1.0 - g) * p).sum(axis=(1, 2, 3), keepdims=True) * bg_inv
    grad = (-g * fg_inv + (1.0 - g) * bg_inv) / n
    return LossValue(float((l_f + l_b).sum() / n), grad)


def hel_loss(p: np.ndarray, g: np.ndarray) -> LossValue:
    parts = (bce_loss(p, g), eel_loss(p, g), rel_loss(p, g))
    return LossValue(parts[0].value + parts[1].value + parts[2].value,
                     parts[0].grad + parts[1].grad + parts[2].grad)
