"""Rank-based curriculum weights over voxels.

Voxels are ranked by uncertainty once per epoch; the weight of a voxel
with rank h out of V at epoch q of Q is

    omega(q, v) = xi * tanh(psi * zeta) + 1,
    psi = 2 h / V - 1,   zeta = 2 q / Q - 1.

With ranks ascending in uncertainty, early epochs (zeta < 0) up-weight
low-uncertainty voxels and the relation reverses past the halfway epoch,
where every weight is exactly 1. Ranking in descending order is also
available; it flips the schedule to hard-to-easy.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class RankOrder(Enum):
    ASCENDING_UNCERTAINTY = "asc"
    DESCENDING_UNCERTAINTY = "desc"


@dataclass(frozen=True)
class CurriculumConfig:
    """Amplitude xi, horizon Q, and rank orientation.

    xi <= 1 keeps every weight >= 1 - xi * tanh(1) > 0.
    """

    xi: float = 1.0
    total_epochs: int = 1
    order: RankOrder = RankOrder.ASCENDING_UNCERTAINTY

    def __post_init__(self):
        if not (np.isfinite(self.xi) and self.xi > 0.0):
            raise ValueError("xi must be finite and > 0")
        if self.total_epochs < 1:
            raise ValueError("total_epochs must be >= 1")


@dataclass(frozen=True)
class CurriculumWeights:
    weights: np.ndarray
    epoch: int


def rank_voxels(uncertainty: np.ndarray, order: RankOrder) -> np.ndarray:
    """Assign ranks 1..V by sorted uncertainty, ties by linear index.

    Ascending order gives rank 1 to the least uncertain voxel. The result
    has the same shape as the input and is a permutation of 1..V.
    """
    u = np.asarray(uncertainty, dtype=np.float64)
    if u.size == 0:
        raise ValueError("empty uncertainty field")
    if not np.all(np.isfinite(u)):
        raise ValueError("uncertainties must be finite")
    flat = u.reshape(-1)
    key = flat if order is RankOrder.ASCENDING_UNCERTAINTY else -flat
    ranks = np.empty(flat.size, dtype=np.int64)
    ranks[np.argsort(key, kind="stable")] = np.arange(1, flat.size + 1)
    return ranks.reshape(u.shape)


def omega(q: int, h, n_voxels: int, cfg: CurriculumConfig):
    """Curriculum weight for rank(s) h out of ``n_voxels`` at epoch q."""
    if not 1 <= q <= cfg.total_epochs:
        raise ValueError(f"epoch {q} outside 1..{cfg.total_epochs}")
    h_arr = np.asarray(h, dtype=np.float64)
    if np.any(h_arr < 1) or np.any(h_arr > n_voxels):
        raise ValueError(f"rank outside 1..{n_voxels}")
    zeta = 2.0 * q / cfg.total_epochs - 1.0
    psi = 2.0 * h_arr / n_voxels - 1.0
    w = cfg.xi * np.tanh(psi * zeta) + 1.0
    return float(w) if w.ndim == 0 else w


def weights_for_epoch(
    uncertainty: np.ndarray, epoch: int, cfg: CurriculumConfig
) -> CurriculumWeights:
    """Rank a full uncertainty field and evaluate its weights at ``epoch``."""
    ranks = rank_voxels(uncertainty, cfg.order)
    w = omega(epoch, ranks, ranks.size, cfg)
    return CurriculumWeights(weights=w, epoch=epoch)
