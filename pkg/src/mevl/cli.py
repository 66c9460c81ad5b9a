"""Command-line interface.

Subcommands: ``fuse`` (combine two evidence volumes into pseudo-labels and
reliability), ``weights`` (curriculum weight field for one epoch),
``metrics`` (compare two label volumes), ``demo`` (desk-scale
semi-supervised training run, optionally rendering a figure/CSV report).

Exit codes: 0 success, 1 runtime or data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .curriculum import CurriculumConfig, RankOrder, weights_for_epoch
from .demo import DemoConfig, run_demo
from .fusion import CONTENTIOUS, FusionConfig, FusionRule, fuse_volumes, resolve_threads
from .metrics import mask_from_labels, report
from .volume_io import (
    VolumeIoError,
    VolumeKind,
    label_volume,
    read_volume,
    scalar_volume,
    write_volume,
)


def _read_kind(path, kind: VolumeKind):
    vol = read_volume(path)
    if vol.kind is not kind:
        raise ValueError(f"{path}: expected a {kind.name} volume, found {vol.kind.name}")
    return vol


def _cmd_fuse(args) -> int:
    a = _read_kind(args.a, VolumeKind.EVIDENCE)
    b = _read_kind(args.b, VolumeKind.EVIDENCE)
    if a.spacing != b.spacing:
        raise ValueError("input spacings differ")
    cfg = FusionConfig(rule=FusionRule(args.rule))
    fused = fuse_volumes(
        a.data, b.data, cfg, args.threshold, n_threads=resolve_threads(args.threads)
    )
    write_volume(label_volume(fused.labels, k=a.k, spacing=a.spacing), args.out)
    if args.reliability:
        write_volume(scalar_volume(fused.reliability, spacing=a.spacing), args.reliability)
    n_cont = int((fused.labels == CONTENTIOUS).sum())
    print(f"fused {np.prod(fused.dims)} voxels, {n_cont} contentious -> {args.out}")
    return 0


def _cmd_weights(args) -> int:
    vol = _read_kind(args.uncertainty, VolumeKind.SCALAR_FIELD)
    order = (
        RankOrder.ASCENDING_UNCERTAINTY
        if args.order == "asc"
        else RankOrder.DESCENDING_UNCERTAINTY
    )
    cfg = CurriculumConfig(xi=args.xi, total_epochs=args.total_epochs, order=order)
    weights = weights_for_epoch(vol.data.astype(np.float64), args.epoch, cfg)
    write_volume(scalar_volume(weights.weights, spacing=vol.spacing), args.out)
    print(f"wrote weights for epoch {args.epoch}/{args.total_epochs} -> {args.out}")
    return 0


def _cmd_metrics(args) -> int:
    pred = _read_kind(args.pred, VolumeKind.LABELS)
    gt = _read_kind(args.gt, VolumeKind.LABELS)
    if pred.spacing != gt.spacing:
        raise ValueError("input spacings differ")
    rep = report(
        mask_from_labels(pred.data, args.cls, pred.spacing),
        mask_from_labels(gt.data, args.cls, gt.spacing),
    )
    if rep.hd95 is None:
        print(
            f"warning: class {args.cls} empty in prediction or ground truth; "
            "surface distances undefined",
            file=sys.stderr,
        )
    out = {"class": args.cls, **asdict(rep)}
    print(json.dumps(out))
    print()
    print(f"{'metric':<10}{'value':>12}")
    for name, value in (("dice", rep.dice), ("jaccard", rep.jaccard),
                        ("hd95_mm", rep.hd95), ("asd_mm", rep.asd)):
        shown = "null" if value is None else f"{value:.6f}"
        print(f"{name:<10}{shown:>12}")
    return 0


def _cmd_demo(args) -> int:
    cfg = DemoConfig(
        seed=args.seed,
        epochs=args.epochs,
        labeled_frac=args.labeled_frac,
        lambda_max=args.lambda_max,
        xi=args.xi,
    )

    def progress(q, use_unlabeled, bd):
        name = "medl" if use_unlabeled else "baseline"
        print(
            f"[{name}] epoch {q:3d}  labeled=({bd.l_labeled_n1:.4f}, {bd.l_labeled_n2:.4f})"
            f"  unlabeled=({bd.l_unlabeled_n1:.4f}, {bd.l_unlabeled_n2:.4f})"
            f"  weighted={bd.l_weighted_labeled:.4f}  iedl={bd.l_iedl_unlabeled:.4f}"
            f"  total={bd.total:.4f}"
        )

    result = run_demo(cfg, progress=progress)
    print()
    print(f"labeled voxels: {result.labeled_voxels}/{result.total_voxels}")
    print(f"{'pipeline':<10}{'dice':>10}{'jaccard':>10}{'hd95':>10}{'asd':>10}")
    for name, rep in (("baseline", result.baseline.metrics), ("medl", result.medl.metrics)):
        h = "null" if rep.hd95 is None else f"{rep.hd95:.4f}"
        a = "null" if rep.asd is None else f"{rep.asd:.4f}"
        print(f"{name:<10}{rep.dice:>10.4f}{rep.jaccard:>10.4f}{h:>10}{a:>10}")
    if args.report_dir:
        from .report import render_demo_report

        written = render_demo_report(args.report_dir, result)
        print(f"report written to {args.report_dir}: {', '.join(written)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mevl",
        description="Evidential fusion, curriculum weighting and metrics for "
        "segmentation evidence volumes",
    )
    parser.add_argument("--version", action="version", version=f"mevl {__version__}")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        metavar="N",
        help="voxel-parallel worker count (default: MEVL_THREADS or CPU count)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="fuse two evidence volumes into pseudo-labels")
    p.add_argument("--a", required=True, help="first EVIDENCE volume (.mev)")
    p.add_argument("--b", required=True, help="second EVIDENCE volume (.mev)")
    p.add_argument("--rule", choices=["caef", "ef"], default="caef")
    p.add_argument("--threshold", type=float, default=0.0,
                   help="reliability threshold below which voxels are contentious")
    p.add_argument("--out", required=True, help="output LABELS volume")
    p.add_argument("--reliability", help="optional output SCALAR_FIELD volume")
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("weights", help="curriculum weight field for one epoch")
    p.add_argument("--uncertainty", required=True, help="SCALAR_FIELD volume")
    p.add_argument("--epoch", type=int, required=True)
    p.add_argument("--total-epochs", type=int, required=True)
    p.add_argument("--xi", type=float, default=1.0)
    p.add_argument("--order", choices=["asc", "desc"], default="asc")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_weights)

    p = sub.add_parser("metrics", help="compare two LABELS volumes")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--class", dest="cls", type=int, required=True)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("demo", help="desk-scale semi-supervised training demo")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--labeled-frac", type=float, default=0.1)
    p.add_argument("--lambda-max", type=float, default=2.0)
    p.add_argument("--xi", type=float, default=1.0)
    p.add_argument("--report-dir", help="write CSV tables and figures here")
    p.set_defaults(func=_cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    if args.command == "weights" and (args.total_epochs < 1 or args.epoch < 1
                                      or args.epoch > args.total_epochs):
        parser.error("need 1 <= epoch <= total-epochs")
    if args.command == "demo" and args.epochs < 1:
        parser.error("need epochs >= 1")
    try:
        return args.func(args)
    except (VolumeIoError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
