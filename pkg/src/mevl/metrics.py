"""Segmentation quality metrics: Dice, Jaccard, 95HD and ASD.

Surfaces are the foreground voxels with at least one six-connected
background neighbor, where anything outside the volume counts as
background. Surface distances are Euclidean between voxel centers under
the anisotropic spacing, in millimeters. The 95th percentile Hausdorff
distance is the max over the two directed 95th percentiles (linear
interpolation between order statistics); the average surface distance is
the mean over the union of both directed distance multisets.

Empty masks have no surface: both overlap metrics fall back to their
documented conventions (1.0 when both masks are empty, 0.0 when exactly
one is) while the distance metrics raise :class:`EmptyMaskError`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree


class EmptyMaskError(ValueError):
    """Surface distances are undefined for an empty mask."""


@dataclass(frozen=True)
class BinaryMask:
    data: np.ndarray  # (H, W, L) bool
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        d = np.asarray(self.data, dtype=bool)
        if d.ndim != 3:
            raise ValueError("mask must be three-dimensional")
        sp = tuple(float(s) for s in self.spacing)
        if len(sp) != 3 or any(not np.isfinite(s) or s <= 0 for s in sp):
            raise ValueError("spacing must be three positive values")
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "spacing", sp)


@dataclass(frozen=True)
class MetricReport:
    dice: float
    jaccard: float
    hd95: float | None  # mm; None when a mask is empty
    asd: float | None  # mm


def _check_dims(pred: BinaryMask, gt: BinaryMask):
    if pred.data.shape != gt.data.shape:
        raise ValueError(f"mask shapes differ: {pred.data.shape} vs {gt.data.shape}")


def dice(pred: BinaryMask, gt: BinaryMask) -> float:
    """2|P&G| / (|P|+|G|); 1.0 when both masks are empty."""
    _check_dims(pred, gt)
    p, g = pred.data, gt.data
    denom = int(p.sum()) + int(g.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int((p & g).sum()) / denom


def jaccard(pred: BinaryMask, gt: BinaryMask) -> float:
    """Intersection over union; 1.0 when both masks are empty."""
    _check_dims(pred, gt)
    p, g = pred.data, gt.data
    union = int((p | g).sum())
    if union == 0:
        return 1.0
    return int((p & g).sum()) / union


def _surface_points(mask: BinaryMask) -> np.ndarray:
    """Physical coordinates (mm) of boundary voxels, six-connectivity."""
    m = mask.data
    padded = np.pad(m, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1, 1:-1]
        & padded[2:, 1:-1, 1:-1]
        & padded[1:-1, :-2, 1:-1]
        & padded[1:-1, 2:, 1:-1]
        & padded[1:-1, 1:-1, :-2]
        & padded[1:-1, 1:-1, 2:]
    )
    surface = m & ~interior
    return np.argwhere(surface).astype(np.float64) * np.asarray(mask.spacing)


def surface_distances(pred: BinaryMask, gt: BinaryMask) -> tuple[np.ndarray, np.ndarray]:
    """Directed nearest-surface distances (pred->gt, gt->pred), in mm."""
    _check_dims(pred, gt)
    if pred.spacing != gt.spacing:
        raise ValueError("mask spacings differ")
    if not pred.data.any() or not gt.data.any():
        raise EmptyMaskError("surface distances undefined for an empty mask")
    p_pts = _surface_points(pred)
    g_pts = _surface_points(gt)
    d_pg = cKDTree(g_pts).query(p_pts)[0]
    d_gp = cKDTree(p_pts).query(g_pts)[0]
    return d_pg, d_gp


def hd95(pred: BinaryMask, gt: BinaryMask) -> float:
    """Max over the two directed 95th-percentile surface distances (mm)."""
    d_pg, d_gp = surface_distances(pred, gt)
    return float(max(np.percentile(d_pg, 95), np.percentile(d_gp, 95)))


def asd(pred: BinaryMask, gt: BinaryMask) -> float:
    """Mean over the union of both directed distance multisets (mm)."""
    d_pg, d_gp = surface_distances(pred, gt)
    return float(np.concatenate([d_pg, d_gp]).mean())


def report(pred: BinaryMask, gt: BinaryMask) -> MetricReport:
    """All four metrics; distances are None when either mask is empty."""
    d = dice(pred, gt)
    j = jaccard(pred, gt)
    try:
        d_pg, d_gp = surface_distances(pred, gt)
    except EmptyMaskError:
        return MetricReport(dice=d, jaccard=j, hd95=None, asd=None)
    h = float(max(np.percentile(d_pg, 95), np.percentile(d_gp, 95)))
    a = float(np.concatenate([d_pg, d_gp]).mean())
    return MetricReport(dice=d, jaccard=j, hd95=h, asd=a)


def mask_from_labels(labels: np.ndarray, class_index: int, spacing=(1.0, 1.0, 1.0)) -> BinaryMask:
    """Binarize a label volume at one class."""
    return BinaryMask(data=np.asarray(labels) == class_index, spacing=spacing)
