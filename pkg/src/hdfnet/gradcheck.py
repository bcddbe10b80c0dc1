"""Central finite-difference checks of every analytic backward pass.

Each suite builds seeded random instances, compares the analytic gradient of a
scalar objective against (f(x+h) - f(x-h)) / 2h element by element and
reports the worst relative error. Large parameter tensors are probed at a
seeded sample of positions; small ones are checked exhaustively.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import losses
from .dynfilter import adaptive_conv, adaptive_conv_backward, ddpm_backward, ddpm_forward_cached, init_ddpm
from .net import (ddpm_preactivations, hdfnet_backward, hdfnet_forward_cached, init_hdfnet, named_arrays,
                  relu_preactivations)

STEP = 1e-5
# sum(P) over a whole image is ~500; partials near 1e-7 need a wider step to clear roundoff
NET_STEP = 1e-3
# keeps the ratio meaningful where the true gradient is exactly zero
REL_FLOOR = 1e-6


@dataclass
class SuiteResult:
    name: str
    instances: int
    checked: int
    max_rel: float
    tol: float
    skipped: int = 0

    @property
    def passed(self) -> bool:
        return self.max_rel < self.tol

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name:<16} instances={self.instances:<3d} elements={self.checked:<6d} "
                f"skipped={self.skipped:<3d} max_rel={self.max_rel:.1e} tol={self.tol:.0e}")


def rel_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), REL_FLOOR)


def numeric_partial(f: Callable[[], float], arr: np.ndarray, idx, h: float = STEP) -> float:
    """d f / d arr[idx] by central differences; ``arr`` is restored afterwards."""
    old = arr[idx]
    arr[idx] = old + h
    fp = f()
    arr[idx] = old - h
    fm = f()
    arr[idx] = old
    return (fp - fm) / (2.0 * h)


def _signature(pres: list[np.ndarray]) -> bytes:
    return b"".join(np.packbits(p > 0).tobytes() for p in pres)


def smooth_partial(f, arr: np.ndarray, idx, h: float = STEP, min_step: float = 1e-8) -> float | None:
    """Central difference for a piecewise-smooth ``f`` returning (value, relu pre-activations).

    If a ReLU changes side between x-h and x+h the difference quotient is not a
    derivative estimate; the step shrinks tenfold until both ends share one
    linear piece, or the probe is dropped (None) below ``min_step``.
    """
    old = arr[idx]
    try:
        while h >= min_step:
            arr[idx] = old + h
            fp, sp = f()
            arr[idx] = old - h
            fm, sm = f()
            if _signature(sp) == _signature(sm):
                return (fp - fm) / (2.0 * h)
            h /= 10.0
        return None
    finally:
        arr[idx] = old


def _probe_indices(rng, arr: np.ndarray, limit: int | None):
    if limit is None or arr.size <= limit:
        return list(np.ndindex(arr.shape))
    flat = rng.choice(arr.size, size=limit, replace=False)
    return [np.unravel_index(int(i), arr.shape) for i in np.sort(flat)]


def check_pairs(f, pairs, rng, limit=None, piecewise=False, h=STEP) -> tuple[int, float, int]:
    """``pairs`` is [(array, analytic_grad)].

    Returns (elements checked, worst relative error, probes skipped at kinks).
    With ``piecewise`` the objective returns (value, relu pre-activations).
    """
    count, worst, skipped = 0, 0.0, 0
    for arr, grad in pairs:
        for idx in _probe_indices(rng, arr, limit):
            num = smooth_partial(f, arr, idx, h) if piecewise else numeric_partial(f, arr, idx, h)
            if num is None:
                skipped += 1
                continue
            worst = max(worst, rel_error(float(grad[idx]), num))
            count += 1
    return count, worst, skipped


# ---------------------------------------------------------------------------
# instances (each returns what check_pairs returns)


def adaptive_conv_instance(seed: int) -> tuple[int, float, int]:
    rng = np.random.default_rng(seed)
    n, c = int(rng.integers(1, 3)), int(rng.integers(1, 5))
    h, w = int(rng.integers(2, 7)), int(rng.integers(2, 7))
    d = int(rng.choice([1, 3, 5]))
    groups = 1 if seed % 2 == 0 else c
    f_r = rng.standard_normal((n, c, h, w))
    kern = rng.standard_normal((n, 9 * groups, h, w))
    u = rng.standard_normal((n, c, h, w))
    g_f, g_k = adaptive_conv_backward(f_r, kern, d, u)
    objective = lambda: float(np.sum(adaptive_conv(f_r, kern, d) * u))
    return check_pairs(objective, [(f_r, g_f), (kern, g_k)], rng)


def ddpm_instance(seed: int, size: int = 6, per_tensor: int = 3) -> tuple[int, float, int]:
    rng = np.random.default_rng(seed)
    params = init_ddpm(rng)
    f_drgb = rng.standard_normal((1, 64, size, size))
    f_tm = rng.standard_normal((1, 64, size, size))
    u = rng.standard_normal((1, 64, size, size))
    out, cache = ddpm_forward_cached(f_drgb, f_tm, params)
    g_drgb, g_tm, g_params = ddpm_backward(u, f_drgb, f_tm, params, cache)

    def objective():
        y, c = ddpm_forward_cached(f_drgb, f_tm, params)
        return float(np.sum(y * u)), ddpm_preactivations(c)

    pairs = [(f_drgb, g_drgb), (f_tm, g_tm)]
    grads = dict(named_arrays(g_params))
    pairs += [(arr, grads[name]) for name, arr in named_arrays(params)]
    return check_pairs(objective, pairs, rng, limit=per_tensor, piecewise=True)


def _loss_inputs(seed: int):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    h, w = int(rng.integers(4, 9)), int(rng.integers(4, 9))
    g = (rng.random((n, 1, h, w)) < 0.5).astype(float)
    g[:, :, : h // 2, : w // 2] = 1.0  # guarantees an edge band in every sample
    g[:, :, h // 2:, w // 2:] = 0.0
    # keep p away from g so |p - g| is differentiable at every probe
    p = rng.uniform(0.05, 0.95, size=g.shape)
    return rng, p, g


def loss_instance(fn) -> Callable[[int], tuple[int, float, int]]:
    def run(seed: int) -> tuple[int, float, int]:
        rng, p, g = _loss_inputs(seed)
        grad = fn(p, g).grad
        return check_pairs(lambda: fn(p, g).value, [(p, grad)], rng)
    return run


def net_instance(seed: int, size: int = 32, per_tensor: int = 1) -> tuple[int, float, int]:
    """Gradient of sum(P) through the whole toy network."""
    rng = np.random.default_rng(seed)
    params = init_hdfnet(seed)
    rgb = rng.random((1, 3, size, size))
    depth = rng.random((1, 1, size, size))
    out, cache = hdfnet_forward_cached(rgb, depth, params)
    g_rgb, g_depth, g_params = hdfnet_backward(np.ones_like(out), rgb, depth, params, cache)

    def objective():
        y, c = hdfnet_forward_cached(rgb, depth, params)
        return float(np.sum(y)), relu_preactivations(c)

    grads = dict(named_arrays(g_params))
    pairs = [(rgb, g_rgb), (depth, g_depth)] + [(arr, grads[name]) for name, arr in named_arrays(params)]
    return check_pairs(objective, pairs, rng, limit=per_tensor, piecewise=True, h=NET_STEP)


SUITES = {
    "adaptive_conv": (adaptive_conv_instance, 1e-4),
    "ddpm": (ddpm_instance, 1e-4),
    "bce": (loss_instance(losses.bce_loss), 1e-6),
    "eel": (loss_instance(losses.eel_loss), 1e-4),
    "rel": (loss_instance(losses.rel_loss), 1e-6),
    "hel": (loss_instance(losses.hel_loss), 1e-4),
    "net": (net_instance, 1e-3),
}
DEFAULT_INSTANCES = {"net": 3}


def run_suite(name: str, seed: int = 0, instances: int | None = None, workers: int = 1) -> SuiteResult:
    fn, tol = SUITES[name]
    instances = instances or DEFAULT_INSTANCES.get(name, 20)
    seeds = [seed * 1000 + i for i in range(instances)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(fn, seeds))
    return SuiteResult(name, instances, sum(r[0] for r in results), max(r[1] for r in results), tol,
                       sum(r[2] for r in results))


def run_all(seed: int = 0, workers: int = 1) -> list[SuiteResult]:
    return [run_suite(name, seed, workers=workers) for name in SUITES]
