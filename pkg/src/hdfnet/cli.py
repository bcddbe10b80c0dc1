"""Command-line entry point: ``hdfnet eval | aggregate | gradcheck | oracle | demo-forward``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import evaluation, gradcheck, oracle_suite
from .errors import ContractViolation, PgmParseError
from .metrics import SCALAR_FIELDS, ave_metric
from .net import hdfnet_forward, init_hdfnet
from .pgm import GrayImage, load_pgm, save_pgm
from .tensor import resize_bilinear

log = logging.getLogger("hdfnet")


def _metric_list(text: str) -> tuple[str, ...]:
    names = tuple(m.strip() for m in text.split(",") if m.strip())
    unknown = [m for m in names if m not in SCALAR_FIELDS]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown metrics {unknown}; choose from {', '.join(SCALAR_FIELDS)}")
    return names


def _sibling(out: Path, tag: str) -> Path:
    return out.with_name(f"{out.stem}.{tag}.csv")


def cmd_eval(args) -> int:
    pairing = evaluation.pair_dataset(args.pred, args.gt)
    result = evaluation.evaluate(pairing, metrics=args.metrics)
    name = args.name or Path(args.gt).name
    rows = [(name, result.report)]
    out = Path(args.out)
    if args.format == "md":
        out.write_text(evaluation.report_markdown(rows, args.metrics))
    else:
        out.write_text(evaluation.report_csv(rows, args.metrics))
    _sibling(out, "per_image").write_text(evaluation.per_image_csv(result.images, args.metrics))
    _sibling(out, "curves").write_text(evaluation.curves_csv(result.report))
    for entry, err in result.errors.items():
        print(f"skipped {entry}: {err}", file=sys.stderr)
    return 0


def cmd_aggregate(args) -> int:
    rows = []
    for path in args.reports:
        rows.extend(evaluation.read_report_csv(path))
    if args.sizes:
        sizes = [int(s) for s in args.sizes.split(",")]
        if len(sizes) != len(rows):
            raise ContractViolation(f"{len(sizes)} sizes given for {len(rows)} dataset rows")
        for (_, rep), n in zip(rows, sizes):
            rep.n_images = n
    rows.append(("AveMetric", ave_metric([rep for _, rep in rows])))
    text = (evaluation.report_markdown(rows) if args.format == "md" else evaluation.report_csv(rows))
    Path(args.out).write_text(text)
    return 0


def cmd_gradcheck(args) -> int:
    workers = evaluation.worker_count()
    names = args.suites or list(gradcheck.SUITES)
    ok = True
    for name in names:
        res = gradcheck.run_suite(name, seed=args.seed, workers=workers)
        print(res.line(), flush=True)
        ok &= res.passed
    return 0 if ok else 1


def cmd_oracle(args) -> int:
    ok = True
    for res in oracle_suite.run_all(seed=args.seed, workers=evaluation.worker_count()):
        print(res.line(), flush=True)
        ok &= res.passed
    return 0 if ok else 1


def _to_multiple_of_16(n: int) -> int:
    return max(16, int(np.ceil(n / 16)) * 16)


def cmd_demo_forward(args) -> int:
    gray = load_pgm(args.rgb).to_array()
    depth = load_pgm(args.depth).to_array()
    h, w = gray.shape
    # network input is resized to a multiple of 16, the prediction back to the RGB size
    nh, nw = _to_multiple_of_16(h), _to_multiple_of_16(w)
    rgb_in = resize_bilinear(np.repeat(gray[None, None], 3, axis=1), nh, nw)
    depth_in = resize_bilinear(depth[None, None], nh, nw)
    pred = hdfnet_forward(rgb_in, depth_in, init_hdfnet(args.seed))
    pred = resize_bilinear(pred, h, w)[0, 0]
    save_pgm(args.out, GrayImage.from_array(pred))
    print(f"wrote {args.out} ({w}x{h}, min={pred.min():.6f}, max={pred.max():.6f})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdfnet", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="score a directory of PGM predictions against ground truths")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--metrics", type=_metric_list, default=SCALAR_FIELDS)
    p.add_argument("--format", choices=("csv", "md"), default="csv")
    p.add_argument("--name", help="dataset label (default: ground-truth directory name)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("aggregate", help="size-weighted mean of dataset reports")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--sizes", help="comma-separated image counts, one per dataset row")
    p.add_argument("--format", choices=("csv", "md"), default="csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("gradcheck", help="finite-difference checks of every backward pass")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--suites", nargs="+", choices=list(gradcheck.SUITES))
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("oracle", help="vectorised kernels and metrics against brute-force references")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("demo-forward", help="toy network forward pass on a PGM pair")
    p.add_argument("--rgb", required=True, help="greyscale PGM, replicated to three channels")
    p.add_argument("--depth", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_demo_forward)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ContractViolation, PgmParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
