"""Evidential and reference segmentation losses with analytic gradients.

The evidential voxel loss combines a trigamma-weighted mean-squared term
over Dirichlet expectations with a log-determinant penalty on the
Dirichlet Fisher information matrix

    I(alpha) = diag(psi_1(alpha_1)..psi_1(alpha_K)) - psi_1(S) * J,

whose determinant is evaluated in O(K) through the diagonal-minus-rank-one
identity

    det I = prod_n psi_1(alpha_n) * (1 - psi_1(S) * sum_n 1/psi_1(alpha_n)).

Reference Dice and cross-entropy losses operate on per-voxel class
probabilities. Aggregators implement the per-sample-mean, summed-over-
samples reduction of the training objective, and the Gaussian warm-up
schedule ramps the unlabeled evidential term into the total. All
reductions use numpy's pairwise summation, so results do not depend on
thread count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import DirichletParams
from .special import tetragamma, trigamma

DICE_SMOOTHING = 1e-5
PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class IedlConfig:
    """Coefficient of the Fisher log-determinant term."""

    lambda_fisher: float = 0.1

    def __post_init__(self):
        if not (np.isfinite(self.lambda_fisher) and self.lambda_fisher >= 0.0):
            raise ValueError("lambda_fisher must be finite and >= 0")


@dataclass(frozen=True)
class WarmupConfig:
    lambda_max: float
    ramp_len: int

    def __post_init__(self):
        if not (np.isfinite(self.lambda_max) and self.lambda_max >= 0.0):
            raise ValueError("lambda_max must be finite and >= 0")
        if self.ramp_len < 1:
            raise ValueError("ramp_len must be >= 1")


@dataclass(frozen=True)
class LossBreakdown:
    l_labeled_n1: float
    l_labeled_n2: float
    l_unlabeled_n1: float
    l_unlabeled_n2: float
    l_weighted_labeled: float
    l_iedl_unlabeled: float
    total: float


def _check_alpha(alpha: np.ndarray) -> np.ndarray:
    a = np.asarray(alpha, dtype=np.float64)
    if not np.all(np.isfinite(a)) or np.any(a < 1.0):
        raise ValueError("alpha entries must be finite and >= 1")
    return a


def _check_onehot(y: np.ndarray, shape) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.shape != shape:
        raise ValueError("one-hot target shape does not match alpha")
    if not (np.all((y == 0.0) | (y == 1.0)) and np.all(y.sum(axis=-1) == 1.0)):
        raise ValueError("targets must be one-hot")
    return y


def fisher_log_det(alpha: np.ndarray) -> np.ndarray:
    """log det I(alpha) over the last axis, via the rank-one identity."""
    a = _check_alpha(alpha)
    tg = trigamma(a)
    gap = 1.0 - trigamma(a.sum(axis=-1)) * (1.0 / tg).sum(axis=-1)
    # gap > 0 for any valid alpha; the determinant is always positive.
    return np.log(tg).sum(axis=-1) + np.log(gap)


def fisher_det(alpha: np.ndarray) -> np.ndarray:
    """det I(alpha) over the last axis."""
    return np.exp(fisher_log_det(alpha))


def iedl_loss_field(
    alpha: np.ndarray,
    y_onehot: np.ndarray,
    weights: np.ndarray,
    cfg: IedlConfig = IedlConfig(),
) -> np.ndarray:
    """Per-voxel evidential loss for batched (V, K) inputs.

    loss_v = w_v * ( sum_n [(y_vn - p_vn)^2 + var_vn] * psi_1(alpha_vn)
                     - lambda_fisher * log det I(alpha_v) )

    with p = alpha/S and var_vn = alpha_vn (S_v - alpha_vn) / (S_v^2 (S_v+1)).
    The weight multiplies the Fisher term as well.
    """
    a = _check_alpha(alpha)
    y = _check_onehot(y_onehot, a.shape)
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w <= 0.0):
        raise ValueError("weights must be > 0")
    s = a.sum(axis=-1, keepdims=True)
    p = a / s
    var = a * (s - a) / (s * s * (s + 1.0))
    base = (((y - p) ** 2 + var) * trigamma(a)).sum(axis=-1)
    if cfg.lambda_fisher > 0.0:
        base = base - cfg.lambda_fisher * fisher_log_det(a)
    return w * base


def iedl_grad_field(
    alpha: np.ndarray,
    y_onehot: np.ndarray,
    weights: np.ndarray,
    cfg: IedlConfig = IedlConfig(),
) -> np.ndarray:
    """Gradient of :func:`iedl_loss_field` w.r.t. alpha, shape (V, K)."""
    a = _check_alpha(alpha)
    y = _check_onehot(y_onehot, a.shape)
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w <= 0.0):
        raise ValueError("weights must be > 0")

    s = a.sum(axis=-1, keepdims=True)
    p = a / s
    res = y - p
    den = s * s * (s + 1.0)
    var = a * (s - a) / den
    f = res**2 + var

    tg = trigamma(a)
    ttg = tetragamma(a)
    s_flat = s[..., 0]
    tg_s = trigamma(s_flat)[..., None]
    ttg_s = tetragamma(s_flat)[..., None]

    # d/dalpha_k of sum_n f_n psi_1(alpha_n); the residual and variance
    # terms couple every n to every k through S.
    c_res = (tg * res * p).sum(axis=-1, keepdims=True)
    c_alpha = (tg * a).sum(axis=-1, keepdims=True)
    c_var = (tg * var).sum(axis=-1, keepdims=True)
    grad = (
        -2.0 / s * tg * res
        + 2.0 * c_res / s
        + (c_alpha + tg * (s - 2.0 * a)) / den
        - c_var * (3.0 * s + 2.0) / (s * (s + 1.0))
        + f * ttg
    )

    if cfg.lambda_fisher > 0.0:
        inv_tg = 1.0 / tg
        t_sum = inv_tg.sum(axis=-1, keepdims=True)
        gap = 1.0 - tg_s * t_sum
        dlogdet = ttg / tg + (tg_s * ttg * inv_tg**2 - ttg_s * t_sum) / gap
        grad = grad - cfg.lambda_fisher * dlogdet

    return w[..., None] * grad


def iedl_voxel_loss(
    alpha: DirichletParams,
    y_onehot,
    weight: float = 1.0,
    cfg: IedlConfig = IedlConfig(),
) -> float:
    """Evidential loss of a single voxel."""
    out = iedl_loss_field(
        alpha.alpha[None, :], np.asarray(y_onehot)[None, :], np.array([weight]), cfg
    )
    return float(out[0])


def iedl_voxel_grad(
    alpha: DirichletParams,
    y_onehot,
    weight: float = 1.0,
    cfg: IedlConfig = IedlConfig(),
) -> np.ndarray:
    """Gradient of the single-voxel evidential loss w.r.t. alpha."""
    out = iedl_grad_field(
        alpha.alpha[None, :], np.asarray(y_onehot)[None, :], np.array([weight]), cfg
    )
    return out[0]


def _check_prob_labels(prob: np.ndarray, labels: np.ndarray):
    p = np.asarray(prob, dtype=np.float64)
    y = np.asarray(labels)
    if p.ndim < 2 or p.shape[:-1] != y.shape:
        raise ValueError("probability field and label field shapes differ")
    if np.any(y < 0) or np.any(y >= p.shape[-1]):
        raise ValueError("labels outside class range")
    return p.reshape(-1, p.shape[-1]), y.reshape(-1).astype(np.int64)


def dice_loss(prob: np.ndarray, labels: np.ndarray) -> float:
    """Soft Dice loss, averaged over all K classes, smoothing 1e-5."""
    p, y = _check_prob_labels(prob, labels)
    k = p.shape[-1]
    onehot = np.eye(k)[y]
    num = 2.0 * (p * onehot).sum(axis=0) + DICE_SMOOTHING
    den = p.sum(axis=0) + onehot.sum(axis=0) + DICE_SMOOTHING
    return float(1.0 - (num / den).mean())


def dice_loss_grad(alpha: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Gradient of :func:`dice_loss` of p = alpha/S w.r.t. alpha, (V, K)."""
    a = _check_alpha(alpha)
    p_full = a / a.sum(axis=-1, keepdims=True)
    p, y = _check_prob_labels(p_full, labels)
    k = p.shape[-1]
    onehot = np.eye(k)[y]
    num = 2.0 * (p * onehot).sum(axis=0) + DICE_SMOOTHING
    den = p.sum(axis=0) + onehot.sum(axis=0) + DICE_SMOOTHING
    g_p = -(2.0 * onehot * den - num) / (k * den * den)
    # chain rule dp_c/dalpha_k = (delta_ck - p_c)/S
    s = a.reshape(-1, k).sum(axis=-1, keepdims=True)
    g_a = (g_p - (g_p * p).sum(axis=-1, keepdims=True)) / s
    return g_a.reshape(a.shape)


def cross_entropy_loss(prob: np.ndarray, labels: np.ndarray) -> float:
    """Mean over voxels of -log p at the true class, p clamped at 1e-12."""
    p, y = _check_prob_labels(prob, labels)
    picked = np.clip(p[np.arange(y.size), y], PROB_CLAMP, 1.0)
    return float(-np.log(picked).mean())


def cross_entropy_grad(alpha: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Gradient of the mean cross-entropy of p = alpha/S w.r.t. alpha."""
    a = _check_alpha(alpha)
    flat = a.reshape(-1, a.shape[-1])
    y = np.asarray(labels).reshape(-1).astype(np.int64)
    if y.size != flat.shape[0]:
        raise ValueError("probability field and label field shapes differ")
    s = flat.sum(axis=-1, keepdims=True)
    grad = np.full_like(flat, 1.0)
    grad /= s
    idx = np.arange(y.size)
    grad[idx, y] -= 1.0 / flat[idx, y]
    return (grad / y.size).reshape(a.shape)


def aggregate_weighted_labeled(
    per_voxel_losses, weights, n_voxels: int | None = None
) -> float:
    """Sum over samples of (sum_v w_v * loss_v) / V.

    Accepts a single (V,) sample or a stacked (n, V) batch.
    """
    losses = np.atleast_2d(np.asarray(per_voxel_losses, dtype=np.float64))
    w = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    if losses.shape != w.shape:
        raise ValueError("losses and weights shapes differ")
    v = losses.shape[1] if n_voxels is None else int(n_voxels)
    return float((losses * w).sum(axis=1).sum() / v)


def aggregate_unlabeled_iedl(per_voxel_losses, n_voxels: int | None = None) -> float:
    """Sum over samples of per-sample mean evidential loss."""
    losses = np.atleast_2d(np.asarray(per_voxel_losses, dtype=np.float64))
    v = losses.shape[1] if n_voxels is None else int(n_voxels)
    return float(losses.sum(axis=1).sum() / v)


def gaussian_warmup(q: int, cfg: WarmupConfig) -> float:
    """lambda_max * exp(-5 (1 - min(q, L)/L)^2), the usual ramp-up shape."""
    if q < 1:
        raise ValueError("epoch must be >= 1")
    t = min(q, cfg.ramp_len) / cfg.ramp_len
    return cfg.lambda_max * float(np.exp(-5.0 * (1.0 - t) ** 2))


def total_objective(
    l_labeled_n1: float,
    l_labeled_n2: float,
    l_unlabeled_n1: float,
    l_unlabeled_n2: float,
    l_weighted_labeled: float,
    l_iedl_unlabeled: float,
    q: int,
    warmup: WarmupConfig,
) -> LossBreakdown:
    """Compose the training objective for epoch q.

    total = (labeled + unlabeled, both networks) + weighted labeled
            + warmup(q) * unlabeled evidential.
    """
    parts = (
        l_labeled_n1,
        l_labeled_n2,
        l_unlabeled_n1,
        l_unlabeled_n2,
        l_weighted_labeled,
        l_iedl_unlabeled,
    )
    if not all(np.isfinite(x) for x in parts):
        raise ValueError("loss parts must be finite")
    lam = gaussian_warmup(q, warmup)
    total = (
        l_labeled_n1
        + l_labeled_n2
        + l_unlabeled_n1
        + l_unlabeled_n2
        + l_weighted_labeled
        + lam * l_iedl_unlabeled
    )
    return LossBreakdown(*parts, total=total)
