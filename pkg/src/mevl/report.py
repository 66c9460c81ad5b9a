"""Render demo training reports: CSV tables plus matplotlib figures."""

from __future__ import annotations

import csv
from dataclasses import asdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .demo import DemoResult
from .losses import LossBreakdown

_LOSS_FIELDS = (
    "l_labeled_n1",
    "l_labeled_n2",
    "l_unlabeled_n1",
    "l_unlabeled_n2",
    "l_weighted_labeled",
    "l_iedl_unlabeled",
    "total",
)


def write_loss_csv(path, pipelines: dict[str, list[LossBreakdown]]) -> None:
    """One row per (pipeline, epoch) with every loss component."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("pipeline", "epoch") + _LOSS_FIELDS)
        for name, breakdowns in pipelines.items():
            for epoch, bd in enumerate(breakdowns, start=1):
                writer.writerow(
                    [name, epoch] + [f"{getattr(bd, f):.9g}" for f in _LOSS_FIELDS]
                )


def write_metrics_csv(path, rows: dict[str, dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("pipeline", "dice", "jaccard", "hd95_mm", "asd_mm"))
        for name, rep in rows.items():
            writer.writerow(
                [
                    name,
                    f"{rep['dice']:.9g}",
                    f"{rep['jaccard']:.9g}",
                    "" if rep["hd95"] is None else f"{rep['hd95']:.9g}",
                    "" if rep["asd"] is None else f"{rep['asd']:.9g}",
                ]
            )


def plot_loss_curves(path, pipelines: dict[str, list[LossBreakdown]]) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, breakdowns in pipelines.items():
        ax.plot(
            np.arange(1, len(breakdowns) + 1),
            [bd.total for bd in breakdowns],
            label=name,
        )
    ax.set_xlabel("epoch")
    ax.set_ylabel("total loss")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_dice_comparison(path, rows: dict[str, dict]) -> None:
    fig, ax = plt.subplots(figsize=(5, 4))
    names = list(rows)
    for i, metric in enumerate(("dice", "jaccard")):
        vals = [rows[n][metric] for n in names]
        ax.bar(np.arange(len(names)) + 0.35 * i, vals, width=0.3, label=metric)
    ax.set_xticks(np.arange(len(names)) + 0.175)
    ax.set_xticklabels(names)
    ax.set_ylim(0, 1)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_reliability_hist(path, reliability: np.ndarray) -> None:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.hist(np.asarray(reliability).reshape(-1), bins=40, range=(0, 1))
    ax.set_xlabel("reliability")
    ax.set_ylabel("voxels")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_demo_report(out_dir, result: DemoResult) -> list[str]:
    """Write all demo artifacts into ``out_dir``; returns the file names."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pipelines = {
        "baseline": result.baseline.breakdowns,
        "medl": result.medl.breakdowns,
    }
    rows = {
        "baseline": asdict(result.baseline.metrics),
        "medl": asdict(result.medl.metrics),
    }
    written = []
    write_loss_csv(out / "losses.csv", pipelines)
    written.append("losses.csv")
    write_metrics_csv(out / "metrics.csv", rows)
    written.append("metrics.csv")
    plot_loss_curves(out / "loss_curves.png", pipelines)
    written.append("loss_curves.png")
    plot_dice_comparison(out / "dice_comparison.png", rows)
    written.append("dice_comparison.png")
    if result.medl.reliability is not None:
        plot_reliability_hist(out / "reliability_hist.png", result.medl.reliability)
        written.append("reliability_hist.png")
    return written
