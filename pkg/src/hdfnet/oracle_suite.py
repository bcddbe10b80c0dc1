"""Equivalence runs of the vectorised code against the brute-force references in ``oracles``."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import metrics, oracles
from .dynfilter import adaptive_conv
from .tensor import ConvParams, avg_pool, conv2d, resize_bilinear


@dataclass
class OracleResult:
    name: str
    cases: int
    max_abs: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_abs <= self.tol

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name:<22} cases={self.cases:<4d} max_abs={self.max_abs:.1e} tol={self.tol:.0e}"


def _diff(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)), initial=0.0))


def adaptive_conv_case(seed: int) -> float:
    rng = np.random.default_rng(seed)
    n, c = int(rng.integers(1, 3)), int(rng.integers(1, 5))
    h, w = int(rng.integers(1, 9)), int(rng.integers(1, 9))
    d = int(rng.choice([1, 3, 5]))
    f_r = rng.standard_normal((n, c, h, w))
    kern = rng.standard_normal((n, 9, h, w))
    return _diff(adaptive_conv(f_r, kern, d), oracles.adaptive_conv_loops(f_r, kern, d))


def conv2d_case(seed: int) -> float:
    rng = np.random.default_rng(seed)
    k = int(rng.choice([1, 3]))
    stride, dil = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    pad = int(rng.integers(0, 3))
    x = rng.standard_normal((int(rng.integers(1, 3)), int(rng.integers(1, 4)), 7, 6))
    p = ConvParams(rng.standard_normal((2, x.shape[1], k, k)), rng.standard_normal(2), stride, pad, dil)
    return _diff(conv2d(x, p), oracles.conv2d_naive(x, p.weight, p.bias, stride, pad, dil))


def avg_pool_case(seed: int) -> float:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((1, 2, int(rng.integers(1, 9)), int(rng.integers(1, 9))))
    return _diff(avg_pool(x, 5, 1, 2), oracles.avg_pool_naive(x, 5, 1, 2))


def bilinear_case(seed: int) -> float:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((int(rng.integers(1, 6)), int(rng.integers(1, 6))))
    oh, ow = int(rng.integers(1, 12)), int(rng.integers(1, 12))
    return _diff(resize_bilinear(x[None, None], oh, ow)[0, 0], oracles.bilinear_naive(x, oh, ow))


def _random_maps(rng, size=16):
    gt = rng.random((size, size)) < rng.uniform(0.1, 0.9)
    kind = rng.integers(3)
    if kind == 0:
        pred = rng.random((size, size))
    elif kind == 1:
        pred = np.clip(gt + rng.normal(0, 0.3, gt.shape), 0, 1)
    else:
        pred = rng.integers(0, 256, gt.shape) / 255.0
    return pred, gt


def threshold_sweep_case(seed: int) -> float:
    rng = np.random.default_rng(seed)
    pred, gt = _random_maps(rng)
    q = metrics.quantize(pred)
    pre_b, rec_b, f_b = oracles.pr_sweep_bruteforce(q, gt)
    pre, rec = metrics.precision_recall(pred, gt)
    f_max, _, curve = metrics.f_measures(pred, gt)
    return max(_diff(pre, pre_b), _diff(rec, rec_b), _diff(curve, f_b), abs(f_max - max(f_b)))


def s_measure_case(seed: int) -> float:
    rng = np.random.default_rng(seed)
    pred, gt = _random_maps(rng, size=int(rng.integers(3, 12)))
    return abs(metrics.s_measure(pred, gt) - oracles.s_measure_literal(pred, gt))


def e_measure_case(seed: int) -> float:
    rng = np.random.default_rng(seed)
    pred, gt = _random_maps(rng, size=int(rng.integers(3, 12)))
    return abs(metrics.e_measure(pred, gt) - oracles.e_measure_literal(pred, gt))


def wfm_case(seed: int) -> float:
    rng = np.random.default_rng(seed)
    size = int(rng.integers(5, 12))
    pred, gt = _random_maps(rng, size=size)
    # constant foreground prediction makes the nearest-pixel tie rule irrelevant
    pred = np.where(gt, rng.uniform(0, 1), pred)
    return abs(metrics.weighted_fmeasure(pred, gt) - oracles.wfm_literal(pred, gt))


CASES = {
    "adaptive_conv_loops": (adaptive_conv_case, 200, 1e-12),
    "conv2d_naive": (conv2d_case, 30, 1e-12),
    "avg_pool_naive": (avg_pool_case, 30, 1e-12),
    "bilinear_naive": (bilinear_case, 30, 1e-12),
    "threshold_sweep": (threshold_sweep_case, 50, 1e-12),
    "s_measure_literal": (s_measure_case, 30, 1e-12),
    "e_measure_literal": (e_measure_case, 30, 1e-12),
    "wfm_literal": (wfm_case, 20, 1e-12),
}


def run_case(name: str, seed: int = 0, workers: int = 1) -> OracleResult:
    fn, count, tol = CASES[name]
    seeds = [seed * 10_000 + i for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        diffs = list(pool.map(fn, seeds))
    return OracleResult(name, count, max(diffs), tol)


def run_all(seed: int = 0, workers: int = 1) -> list[OracleResult]:
    return [run_case(name, seed, workers) for name in CASES]
