"""Dataset pairing, parallel per-image evaluation and report files."""
from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractViolation
from .metrics import SCALAR_FIELDS, ImageScores, MetricReport, evaluate_image, summarize
from .pgm import load_pgm
from .tensor import resize_bilinear

log = logging.getLogger(__name__)

PGM_SUFFIX = ".pgm"


def worker_count() -> int:
    """Pool size from HDF_THREADS, defaulting to the number of logical cores."""
    raw = os.environ.get("HDF_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ContractViolation(f"HDF_THREADS must be an integer, got {raw!r}") from None
        if n < 1:
            raise ContractViolation(f"HDF_THREADS must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


@dataclass
class DatasetPairing:
    entries: list[tuple[str, Path, Path]]
    unmatched: list[str] = field(default_factory=list)  # prediction stems without a ground truth


def _stems(directory) -> dict[str, Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ContractViolation(f"not a readable directory: {directory}")
    return {p.stem: p for p in sorted(directory.iterdir()) if p.suffix == PGM_SUFFIX and p.is_file()}


def pair_dataset(pred_dir, gt_dir) -> DatasetPairing:
    """Match prediction and ground-truth files by stem (case-sensitive)."""
    preds, gts = _stems(pred_dir), _stems(gt_dir)
    names = sorted(preds.keys() & gts.keys())
    if not names:
        raise ContractViolation(f"no prediction in {pred_dir} has a ground truth in {gt_dir}")
    unmatched = sorted(preds.keys() - gts.keys())
    for name in unmatched:
        log.warning("prediction %s has no ground truth, skipped", name)
    return DatasetPairing([(n, preds[n], gts[n]) for n in names], unmatched)


def load_pair(pred_path, gt_path) -> tuple[np.ndarray, np.ndarray]:
    """Prediction resized (bilinear) to the ground-truth size when they differ."""
    pred = load_pgm(pred_path).to_array()
    gt = load_pgm(gt_path).to_array()
    if pred.shape != gt.shape:
        pred = resize_bilinear(pred[None, None], *gt.shape)[0, 0]
    return pred, gt


@dataclass
class EvaluationResult:
    report: MetricReport
    images: list[ImageScores]
    errors: dict[str, str]


def _evaluate_entry(entry, metrics):
    name, pred_path, gt_path = entry
    try:
        pred, gt = load_pair(pred_path, gt_path)
        return evaluate_image(pred, gt, name=name, metrics=metrics), None
    except (OSError, ValueError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def evaluate(pairing: DatasetPairing, metrics=SCALAR_FIELDS, workers: int | None = None) -> EvaluationResult:
    """Score every pair; failed entries are recorded and skipped."""
    unknown = set(metrics) - set(SCALAR_FIELDS)
    if unknown:
        raise ContractViolation(f"unknown metrics: {sorted(unknown)}")
    workers = workers or worker_count()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda e: _evaluate_entry(e, metrics), pairing.entries))
    images, errors = [], {}
    for (name, _, _), (scores, err) in sorted(zip(pairing.entries, results), key=lambda r: r[0][0]):
        if err is None:
            images.append(scores)
        else:
            log.error("%s: %s", name, err)
            errors[name] = err
    if not images:
        raise ContractViolation("every entry failed to evaluate")
    return EvaluationResult(summarize(images), images, errors)


# ---------------------------------------------------------------------------
# report files


def _fmt(v: float) -> str:
    return f"{v:.10f}"


def report_csv(rows: list[tuple[str, MetricReport]], metrics=SCALAR_FIELDS) -> str:
    cols = [m for m in SCALAR_FIELDS if m in metrics]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["dataset", "n_images", *cols])
    for name, rep in rows:
        writer.writerow([name, rep.n_images, *(_fmt(getattr(rep, c)) for c in cols)])
    return buf.getvalue()


_MD_HEADERS = {"f_max": "F_max ↑", "f_ada": "F_ada ↑", "wfm": "F_β^ω ↑", "mae": "MAE ↓",
               "s_measure": "S_m ↑", "e_measure": "E_m ↑"}


def report_markdown(rows: list[tuple[str, MetricReport]], metrics=SCALAR_FIELDS) -> str:
    cols = [m for m in SCALAR_FIELDS if m in metrics]
    lines = ["| Dataset | N | " + " | ".join(_MD_HEADERS[c] for c in cols) + " |",
             "|---|---:|" + "---:|" * len(cols)]
    for name, rep in rows:
        lines.append(f"| {name} | {rep.n_images} | " + " | ".join(f"{getattr(rep, c):.3f}" for c in cols) + " |")
    return "\n".join(lines) + "\n"


def per_image_csv(images: list[ImageScores], metrics=SCALAR_FIELDS) -> str:
    cols = [m for m in SCALAR_FIELDS if m in metrics]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["name", *cols])
    for s in images:
        writer.writerow([s.name, *(_fmt(getattr(s, c)) for c in cols)])
    return buf.getvalue()


def curves_csv(report: MetricReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["threshold", "precision", "recall", "f_measure"])
    for t in range(len(report.fm_curve)):
        writer.writerow([t, _fmt(report.precision[t]), _fmt(report.recall[t]), _fmt(report.fm_curve[t])])
    return buf.getvalue()


def read_report_csv(path) -> list[tuple[str, MetricReport]]:
    """Rows of a report written by ``report_csv`` (all six metric columns required)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ContractViolation(f"report {path} has no rows")
    out = []
    for row in rows:
        missing = [c for c in SCALAR_FIELDS if c not in row]
        if missing:
            raise ContractViolation(f"report {path} lacks columns {missing}")
        out.append((row["dataset"], MetricReport(**{c: float(row[c]) for c in SCALAR_FIELDS},
                                                 n_images=int(row["n_images"]))))
    return out
