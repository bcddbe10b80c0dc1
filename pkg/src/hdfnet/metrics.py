"""Saliency evaluation measures: PR curve, F-measure (max / adaptive), weighted
F-measure, MAE, S-measure, E-measure, and size-weighted aggregation over datasets.

Per-image functions take a continuous prediction in [0, 1] and a ground
truth as 2-D arrays. Ground truths are binarised at 0.5 where a binary mask
is needed; MAE uses the continuous values.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ContractViolation

BETA2 = 0.3
N_THRESHOLDS = 256
EPS = np.spacing(1.0)
SCALAR_FIELDS = ("f_max", "f_ada", "wfm", "mae", "s_measure", "e_measure")


@dataclass(frozen=True)
class PrPoint:
    threshold: int
    precision: float
    recall: float


@dataclass
class MetricReport:
    f_max: float
    f_ada: float
    wfm: float
    mae: float
    s_measure: float
    e_measure: float
    precision: np.ndarray | None = field(default=None, repr=False)  # (256,) mean over images
    recall: np.ndarray | None = field(default=None, repr=False)
    fm_curve: np.ndarray | None = field(default=None, repr=False)
    n_images: int = 1

    @property
    def pr(self) -> list[PrPoint]:
        return [PrPoint(t, float(p), float(r)) for t, (p, r) in enumerate(zip(self.precision, self.recall))]

    def scalars(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in SCALAR_FIELDS}


def _check_pair(pred: np.ndarray, gt: np.ndarray):
    if pred.shape != gt.shape:
        raise ContractViolation(f"prediction shape {pred.shape} does not match ground truth {gt.shape}")
    if pred.ndim != 2:
        raise ContractViolation(f"expected 2-D maps, got rank {pred.ndim}")


def binarize_gt(gt: np.ndarray) -> np.ndarray:
    return np.asarray(gt) >= 0.5


def quantize(pred: np.ndarray) -> np.ndarray:
    """Map [0, 1] reals to 0..255 by rounding p*255; integer input passes through."""
    pred = np.asarray(pred)
    if np.issubdtype(pred.dtype, np.integer):
        return pred.astype(np.int64)
    return np.rint(np.clip(pred, 0.0, 1.0) * 255.0).astype(np.int64)


def _safe_div(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    return np.divide(num, den, out=np.zeros(np.broadcast(num, den).shape), where=den != 0)


def confusion_counts(pred: np.ndarray, gt_bin: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """TP(t), FP(t) for B = (P_u8 > t), t = 0..255, plus the positive count |G|."""
    _check_pair(np.asarray(pred), np.asarray(gt_bin))
    q = quantize(pred)
    g = np.asarray(gt_bin, dtype=bool)
    fg_hist = np.bincount(q[g], minlength=256)
    bg_hist = np.bincount(q[~g], minlength=256)
    # pixels strictly above t: suffix sums starting at t + 1
    tp = np.concatenate([np.cumsum(fg_hist[::-1])[::-1][1:], [0]])
    fp = np.concatenate([np.cumsum(bg_hist[::-1])[::-1][1:], [0]])
    return tp, fp, int(g.sum())


def precision_recall(pred: np.ndarray, gt_bin: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    tp, fp, positives = confusion_counts(pred, gt_bin)
    return _safe_div(tp, tp + fp), _safe_div(tp, positives)


def pr_curve(pred: np.ndarray, gt_bin: np.ndarray) -> list[PrPoint]:
    precision, recall = precision_recall(pred, gt_bin)
    return [PrPoint(t, float(p), float(r)) for t, (p, r) in enumerate(zip(precision, recall))]


def f_measure(precision, recall, beta2: float = BETA2):
    """(1+b2) P R / (b2 P + R), zero where the denominator vanishes."""
    precision = np.asarray(precision, dtype=float)
    recall = np.asarray(recall, dtype=float)
    return _safe_div((1.0 + beta2) * precision * recall, beta2 * precision + recall)


def adaptive_threshold(pred: np.ndarray) -> float:
    return min(2.0 * float(np.mean(pred)), 1.0)


def adaptive_binarize(pred: np.ndarray) -> np.ndarray:
    """pred >= min(2 mean, 1); an all-zero map (threshold 0) stays empty."""
    thr = adaptive_threshold(pred)
    return pred >= thr if thr > 0 else pred > 0


def adaptive_fmeasure(pred: np.ndarray, gt_bin: np.ndarray) -> float:
    _check_pair(pred, gt_bin)
    g = np.asarray(gt_bin, dtype=bool)
    b = adaptive_binarize(pred)
    tp = np.count_nonzero(b & g)
    precision = _safe_div(tp, np.count_nonzero(b))
    recall = _safe_div(tp, np.count_nonzero(g))
    return float(f_measure(precision, recall))


def f_measures(pred: np.ndarray, gt_bin: np.ndarray) -> tuple[float, float, np.ndarray]:
    """(f_max, f_ada, fm_curve) for one image."""
    curve = f_measure(*precision_recall(pred, gt_bin))
    return float(curve.max()), adaptive_fmeasure(pred, gt_bin), curve


def mae(pred: np.ndarray, gt: np.ndarray) -> float:
    _check_pair(np.asarray(pred), np.asarray(gt))
    return float(np.mean(np.abs(np.asarray(pred, dtype=float) - np.asarray(gt, dtype=float))))


# ---------------------------------------------------------------------------
# S-measure


def _object_score(values: np.ndarray) -> float:
    if values.size == 0:
        return 0.0
    x = values.mean()
    sigma = values.std(ddof=1) if values.size > 1 else 0.0
    return 2.0 * x / (x * x + 1.0 + sigma + EPS)


def _s_object(pred: np.ndarray, gt: np.ndarray) -> float:
    mu = gt.mean()
    fg = _object_score(pred[gt])
    bg = _object_score(1.0 - pred[~gt])
    return mu * fg + (1.0 - mu) * bg


def gt_centroid(gt: np.ndarray) -> tuple[int, int]:
    """Split point (col, row): rounded foreground centroid plus one."""
    h, w = gt.shape
    if not gt.any():
        return int(np.round(w / 2)) + 1, int(np.round(h / 2)) + 1
    rows, cols = np.nonzero(gt)
    return int(np.round(cols.mean())) + 1, int(np.round(rows.mean())) + 1


def _ssim(pred: np.ndarray, gt: np.ndarray) -> float:
    n = pred.size
    if n == 0:
        return 0.0
    x, y = pred.mean(), gt.mean()
    dof = max(n - 1, 1)
    sx = np.sum((pred - x) ** 2) / dof
    sy = np.sum((gt - y) ** 2) / dof
    sxy = np.sum((pred - x) * (gt - y)) / dof
    alpha = 4.0 * x * y * sxy
    beta = (x * x + y * y) * (sx + sy)
    if alpha != 0:
        return float(alpha / (beta + EPS))
    return 1.0 if beta == 0 else 0.0


def _s_region(pred: np.ndarray, gt: np.ndarray) -> float:
    h, w = gt.shape
    cx, cy = gt_centroid(gt)
    area = h * w
    gtf = gt.astype(float)
    quads = [(slice(0, cy), slice(0, cx)), (slice(0, cy), slice(cx, w)),
             (slice(cy, h), slice(0, cx)), (slice(cy, h), slice(cx, w))]
    w1 = cx * cy / area
    w2 = cy * (w - cx) / area
    w3 = (h - cy) * cx / area
    weights = (w1, w2, w3, 1.0 - w1 - w2 - w3)
    return sum(wt * _ssim(pred[rs, cs], gtf[rs, cs]) for wt, (rs, cs) in zip(weights, quads))


def s_measure(pred: np.ndarray, gt_bin: np.ndarray, alpha: float = 0.5) -> float:
    _check_pair(pred, gt_bin)
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt_bin, dtype=bool)
    y = gt.mean()
    if y == 0:
        score = 1.0 - pred.mean()
    elif y == 1:
        score = pred.mean()
    else:
        score = alpha * _s_object(pred, gt) + (1.0 - alpha) * _s_region(pred, gt)
    return float(np.clip(score, 0.0, 1.0))


# ---------------------------------------------------------------------------
# E-measure


def e_measure(pred: np.ndarray, gt_bin: np.ndarray) -> float:
    """Enhanced alignment of the adaptively binarised prediction with the mask."""
    _check_pair(pred, gt_bin)
    g = np.asarray(gt_bin, dtype=float)
    b = adaptive_binarize(pred).astype(float)
    phi_g = g - g.mean()
    if not phi_g.any():
        xi = np.where(b == g, 1.0, -1.0)
    else:
        phi_b = b - b.mean()
        den = phi_b ** 2 + phi_g ** 2
        xi = _safe_div(2.0 * phi_b * phi_g, den)
    return float(np.mean((xi + 1.0) ** 2 / 4.0))


# ---------------------------------------------------------------------------
# weighted F-measure


def gaussian_kernel(size: int = 7, sigma: float = 5.0) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2
    k = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2.0 * sigma * sigma))
    return k / k.sum()


def weighted_fmeasure(pred: np.ndarray, gt_bin: np.ndarray, beta2: float = 1.0) -> float:
    _check_pair(pred, gt_bin)
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt_bin, dtype=bool)
    if not gt.any():
        return 0.0
    dist, idx = ndimage.distance_transform_edt(~gt, return_indices=True)
    err = np.abs(pred - gt)
    # background errors borrow the error of their nearest foreground pixel
    err_t = err[idx[0], idx[1]]
    err_a = ndimage.correlate(err_t, gaussian_kernel(), mode="nearest")
    min_e = np.where(gt & (err_a < err), err_a, err)
    importance = np.where(gt, 1.0, 2.0 - np.exp(np.log(0.5) / 5.0 * dist))
    ew = min_e * importance
    tp_w = gt.sum() - ew[gt].sum()
    fp_w = ew[~gt].sum()
    recall = 1.0 - ew[gt].mean()
    precision = tp_w / (tp_w + fp_w + EPS)
    q = (1.0 + beta2) * recall * precision / (recall + beta2 * precision + EPS)
    return float(np.clip(q, 0.0, 1.0))


# ---------------------------------------------------------------------------
# per-image bundle and dataset aggregation


@dataclass
class ImageScores:
    name: str
    mae: float
    f_ada: float
    wfm: float
    s_measure: float
    e_measure: float
    f_max: float  # best F over thresholds for this image alone
    precision: np.ndarray = field(repr=False)
    recall: np.ndarray = field(repr=False)
    fm_curve: np.ndarray = field(repr=False)


def evaluate_image(pred: np.ndarray, gt: np.ndarray, name: str = "", metrics=SCALAR_FIELDS) -> ImageScores:
    """All requested measures for one prediction / ground-truth pair (2-D, values in [0, 1])."""
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    _check_pair(pred, gt)
    gt_bin = binarize_gt(gt)
    wanted = set(metrics)
    nan = float("nan")
    precision, recall = precision_recall(pred, gt_bin)
    curve = f_measure(precision, recall)
    return ImageScores(
        name=name,
        mae=mae(pred, gt) if "mae" in wanted else nan,
        f_ada=adaptive_fmeasure(pred, gt_bin) if "f_ada" in wanted else nan,
        wfm=weighted_fmeasure(pred, gt_bin) if "wfm" in wanted else nan,
        s_measure=s_measure(pred, gt_bin) if "s_measure" in wanted else nan,
        e_measure=e_measure(pred, gt_bin) if "e_measure" in wanted else nan,
        f_max=float(curve.max()),
        precision=precision, recall=recall, fm_curve=curve,
    )


def summarize(scores: list[ImageScores]) -> MetricReport:
    """Dataset report: per-image means; f_max is the peak of the mean F curve."""
    if not scores:
        raise ContractViolation("cannot summarise an empty list of images")
    mean = lambda attr: float(np.mean([getattr(s, attr) for s in scores]))
    fm_curve = np.mean([s.fm_curve for s in scores], axis=0)
    return MetricReport(
        f_max=float(fm_curve.max()),
        f_ada=mean("f_ada"),
        wfm=mean("wfm"),
        mae=mean("mae"),
        s_measure=mean("s_measure"),
        e_measure=mean("e_measure"),
        precision=np.mean([s.precision for s in scores], axis=0),
        recall=np.mean([s.recall for s in scores], axis=0),
        fm_curve=fm_curve,
        n_images=len(scores),
    )


def ave_metric(reports: list[MetricReport]) -> MetricReport:
    """Size-weighted mean of dataset reports (curves are weighted the same way)."""
    if not reports:
        raise ContractViolation("ave_metric needs at least one report")
    sizes = np.array([r.n_images for r in reports], dtype=float)
    if np.any(sizes <= 0):
        raise ContractViolation(f"dataset sizes must be positive, got {sizes.tolist()}")
    w = sizes / sizes.sum()
    combine = lambda attr: sum(wk * getattr(r, attr) for wk, r in zip(w, reports))
    out = {k: float(combine(k)) for k in SCALAR_FIELDS}
    # reports read back from CSV carry no curves
    curves = {k: combine(k) if all(getattr(r, k) is not None for r in reports) else None
              for k in ("precision", "recall", "fm_curve")}
    return MetricReport(**out, **curves, n_images=int(sizes.sum()))
