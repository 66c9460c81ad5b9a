"""Desk-scale semi-supervised training loop over a synthetic volume.

Two per-voxel linear evidential classifiers with different feature maps
(one intensity-driven, one with an additional quadratic coordinate basis)
are trained by full-batch gradient descent. The labeled set is a central
slab of the volume, so a model trained on labels alone acquires a
coordinate bias that pseudo-labels on the remaining voxels can correct.

Each epoch both classifiers predict evidence everywhere; the fused masses
provide pseudo-labels, reliability weights and the uncertainty used for
curriculum ranking. The baseline pipeline optimizes the labeled terms
only (plain plus curriculum-weighted); the full pipeline adds the
pseudo-label terms and the warm-up-scaled evidential loss. Everything is
deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter
from scipy.special import expit

from .curriculum import CurriculumConfig, omega, rank_voxels
from .fusion import (
    CONTENTIOUS,
    FusionConfig,
    blend_uncertainty,
    fuse_mass_arrays,
    reliability_field,
)
from .belief import belief_field
from .losses import (
    IedlConfig,
    LossBreakdown,
    WarmupConfig,
    aggregate_unlabeled_iedl,
    aggregate_weighted_labeled,
    cross_entropy_grad,
    cross_entropy_loss,
    dice_loss,
    dice_loss_grad,
    gaussian_warmup,
    iedl_grad_field,
    iedl_loss_field,
    total_objective,
)
from .metrics import BinaryMask, MetricReport, report
from .synth import PhantomSpec, generate_intensity, generate_labels


@dataclass(frozen=True)
class DemoConfig:
    seed: int = 0
    epochs: int = 50
    labeled_frac: float = 0.1
    dims: tuple[int, int, int] = (16, 16, 8)
    k: int = 2
    n_blobs: int = 5
    intensity_sigma: float = 0.3
    lr: float = 4.0
    xi: float = 1.0
    lambda_fisher: float = 0.1
    lambda_max: float = 2.0
    reliability_threshold: float = 0.8
    burn_in_frac: float = 0.2  # labeled-only epochs before pseudo-labels engage

    def __post_init__(self):
        if not 0.0 < self.labeled_frac <= 1.0:
            raise ValueError("labeled fraction must lie in (0, 1]")
        if self.epochs < 1:
            raise ValueError("need at least one epoch")
        if not 0.0 <= self.burn_in_frac < 1.0:
            raise ValueError("burn-in fraction must lie in [0, 1)")


@dataclass(frozen=True)
class PipelineResult:
    breakdowns: list[LossBreakdown]
    metrics: MetricReport
    labels: np.ndarray
    reliability: np.ndarray | None


@dataclass(frozen=True)
class DemoResult:
    baseline: PipelineResult
    medl: PipelineResult
    labeled_voxels: int
    total_voxels: int


def _features(dims, intensity: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-voxel feature matrices for the two heterogeneous classifiers.

    The first view is purely photometric (raw plus box-smoothed intensity),
    the second adds a quadratic coordinate basis; their failure modes are
    complementary, which is what makes fusing their evidence worthwhile.
    """
    coords = [np.linspace(-1.0, 1.0, d) for d in dims]
    x, y, z = np.meshgrid(*coords, indexing="ij")
    smooth3 = uniform_filter(intensity, size=3, mode="nearest")
    smooth5 = uniform_filter(intensity, size=5, mode="nearest")
    ones = np.ones(dims)
    phi_a = np.stack([ones, intensity, smooth3], axis=-1)
    phi_b = np.stack(
        [ones, x, y, z, x * x, y * y, z * z, intensity, smooth5], axis=-1
    )
    n = int(np.prod(dims))
    phi_a, phi_b = phi_a.reshape(n, -1), phi_b.reshape(n, -1)
    # standardize the non-bias columns; conditioning matters a lot at a
    # 50-epoch full-batch budget
    for phi in (phi_a, phi_b):
        cols = phi[:, 1:]
        cols -= cols.mean(axis=0)
        cols /= np.maximum(cols.std(axis=0), 1e-9)
    return phi_a, phi_b


def _labeled_mask(dims, frac: float) -> np.ndarray:
    """Central slab along the first axis holding ~frac of the voxels."""
    h = dims[0]
    width = max(1, int(round(frac * h)))
    lo = (h - width) // 2
    mask = np.zeros(dims, dtype=bool)
    mask[lo : lo + width] = True
    return mask.reshape(-1)


def _forward(phi: np.ndarray, w: np.ndarray):
    logits = phi @ w.T
    evidence = np.logaddexp(0.0, logits)  # softplus keeps evidence positive
    alpha = evidence + 1.0
    return logits, alpha


def run_demo(cfg: DemoConfig, progress=None) -> DemoResult:
    """Train the labeled-only baseline and the full objective, same data."""
    spec = PhantomSpec(dims=cfg.dims, k=cfg.k, n_blobs=cfg.n_blobs, seed=cfg.seed)
    gt = generate_labels(spec)
    intensity = generate_intensity(gt, cfg.k, cfg.intensity_sigma, cfg.seed + 1)
    phi_a, phi_b = _features(cfg.dims, intensity)
    labeled = _labeled_mask(cfg.dims, cfg.labeled_frac)
    y = gt.reshape(-1)

    rng = np.random.Generator(np.random.PCG64(cfg.seed + 2))
    w_a0 = 0.01 * rng.standard_normal((cfg.k, phi_a.shape[1]))
    w_b0 = 0.01 * rng.standard_normal((cfg.k, phi_b.shape[1]))

    results = []
    for use_unlabeled in (False, True):
        out = _train(
            cfg, phi_a, phi_b, w_a0.copy(), w_b0.copy(), y, labeled, gt,
            use_unlabeled, progress,
        )
        results.append(out)
    return DemoResult(
        baseline=results[0],
        medl=results[1],
        labeled_voxels=int(labeled.sum()),
        total_voxels=y.size,
    )


def _train(cfg, phi_a, phi_b, w_a, w_b, y, labeled, gt, use_unlabeled, progress):
    unlabeled = ~labeled
    v_l = int(labeled.sum())
    v_u = int(unlabeled.sum())
    y_l = y[labeled]
    onehot = np.eye(cfg.k)

    fuse_cfg = FusionConfig()
    cur_cfg = CurriculumConfig(xi=cfg.xi, total_epochs=cfg.epochs)
    iedl_cfg = IedlConfig(lambda_fisher=cfg.lambda_fisher)
    warm_cfg = WarmupConfig(
        lambda_max=cfg.lambda_max, ramp_len=max(1, int(cfg.epochs / 2.5))
    )

    # Pseudo-labels from an untrained model pass the reliability gate as
    # soon as predictions sharpen, right or wrong; a labeled-only burn-in
    # lets the networks become informative before co-training starts.
    burn_in = int(cfg.burn_in_frac * cfg.epochs)

    breakdowns: list[LossBreakdown] = []
    rel_full = None
    for q in range(1, cfg.epochs + 1):
        logits_a, alpha_a = _forward(phi_a, w_a)
        logits_b, alpha_b = _forward(phi_b, w_b)
        grads = [np.zeros_like(alpha_a), np.zeros_like(alpha_b)]

        # Fused masses drive pseudo-labels and the labeled-branch blend.
        bel_a, u_a = belief_field(alpha_a - 1.0)
        bel_b, u_b = belief_field(alpha_b - 1.0)
        fused_s, fused_u = fuse_mass_arrays(bel_a, u_a, bel_b, u_b, fuse_cfg.rule)
        rel_full = reliability_field(fused_s, fused_u)
        pseudo = np.argmax(fused_s, axis=-1)
        pseudo[rel_full < cfg.reliability_threshold] = CONTENTIOUS

        l_lab = [0.0, 0.0]
        l_unlab = [0.0, 0.0]
        l_wl = 0.0
        l_iedl = 0.0
        lam = gaussian_warmup(q, warm_cfg)

        for i, (alpha, own_u) in enumerate(((alpha_a, u_a), (alpha_b, u_b))):
            prob = alpha / alpha.sum(axis=-1, keepdims=True)
            a_l = alpha[labeled]
            p_l = prob[labeled]

            # plain labeled loss (both parts, both networks)
            l_lab[i] = dice_loss(p_l, y_l) + cross_entropy_loss(p_l, y_l)
            grads[i][labeled] += dice_loss_grad(a_l, y_l) + cross_entropy_grad(a_l, y_l)

            # curriculum-weighted labeled cross-entropy (per-voxel loss)
            u_blend = blend_uncertainty(own_u[labeled], fused_u[labeled], fuse_cfg)
            ranks = rank_voxels(u_blend, cur_cfg.order)
            w_cur = omega(q, ranks, v_l, cur_cfg)
            ce_vox = -np.log(np.clip(p_l[np.arange(v_l), y_l], 1e-12, 1.0))
            l_wl += aggregate_weighted_labeled(ce_vox, w_cur, v_l)
            g_ce = cross_entropy_grad(a_l, y_l) * v_l  # per-voxel grads
            grads[i][labeled] += w_cur[:, None] * g_ce / v_l

            if use_unlabeled and v_u:
                keep = unlabeled.copy()
                keep[unlabeled] = pseudo[unlabeled] != CONTENTIOUS
                v_keep = int(keep.sum())
                if v_keep == 0:
                    continue
                y_u = pseudo[keep]
                a_u = alpha[keep]
                p_u = prob[keep]
                r_u = rel_full[keep]

                # pseudo-label dice + reliability-weighted cross-entropy
                l_unlab[i] = dice_loss(p_u, y_u)
                ce_u = -np.log(np.clip(p_u[np.arange(v_keep), y_u], 1e-12, 1.0))
                l_unlab[i] += float((r_u * ce_u).sum() / v_keep)

                # curriculum-ranked evidential loss against pseudo-labels
                ranks_u = rank_voxels(fused_u[keep], cur_cfg.order)
                w_u = omega(q, ranks_u, v_keep, cur_cfg)
                y_u_hot = onehot[y_u]
                iedl_vox = iedl_loss_field(a_u, y_u_hot, w_u, iedl_cfg)
                l_iedl += aggregate_unlabeled_iedl(iedl_vox, v_keep)

                # the objective is measured every epoch, but pseudo-label
                # gradients only flow once the burn-in is over
                if q > burn_in:
                    grads[i][keep] += dice_loss_grad(a_u, y_u)
                    g_ce_u = cross_entropy_grad(a_u, y_u) * v_keep
                    grads[i][keep] += r_u[:, None] * g_ce_u / v_keep
                    grads[i][keep] += lam * iedl_grad_field(a_u, y_u_hot, w_u, iedl_cfg) / v_keep

        bd = total_objective(
            l_lab[0], l_lab[1], l_unlab[0], l_unlab[1], l_wl, l_iedl, q, warm_cfg
        )
        breakdowns.append(bd)
        if progress is not None:
            progress(q, use_unlabeled, bd)

        for w, grad, logits, phi in (
            (w_a, grads[0], logits_a, phi_a),
            (w_b, grads[1], logits_b, phi_b),
        ):
            g_logits = grad * expit(logits)  # d softplus
            w -= cfg.lr * (g_logits.T @ phi)

    _, alpha_a = _forward(phi_a, w_a)
    _, alpha_b = _forward(phi_b, w_b)
    prob = 0.5 * (
        alpha_a / alpha_a.sum(axis=-1, keepdims=True)
        + alpha_b / alpha_b.sum(axis=-1, keepdims=True)
    )
    labels = np.argmax(prob, axis=-1).reshape(cfg.dims)
    rep = report(BinaryMask(labels == 1), BinaryMask(gt == 1))
    return PipelineResult(
        breakdowns=breakdowns,
        metrics=rep,
        labels=labels,
        reliability=None if rel_full is None else rel_full.reshape(cfg.dims),
    )
