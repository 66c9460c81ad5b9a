"""Voxel-wise fusion of two generalized mass assignments.

Two fusion rules are exposed. The class-aware rule combines singleton
masses bilinearly and lets each source's singleton mass interact with the
other source's multi-set mass through a 1/(1+K) coefficient, which keeps
the multi-set (uncertainty) contribution from dominating as the class
count grows. The plain rule is identical except the interaction
coefficient is 1; it satisfies a strict vacuous identity and serves as
the ablation baseline.

Raw fused masses are renormalized to sum to one. Reliability scores
combine the fused multi-set mass with the Shannon entropy (base 2) of the
fused singleton masses and are used to mask or weight pseudo-labels.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .belief import Gpma, SIMPLEX_TOL, belief_field

# Hard-label sentinel for voxels whose reliability falls below threshold.
CONTENTIOUS = 0xFFFF


class FusionRule(Enum):
    CAEF = "caef"
    EF = "ef"


@dataclass(frozen=True)
class FusionConfig:
    """Fusion rule plus the blend weights for the labeled-branch uncertainty."""

    rule: FusionRule = FusionRule.CAEF
    lambda1: float = 0.5
    lambda2: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.lambda1 <= 1.0 and 0.0 <= self.lambda2 <= 1.0):
            raise ValueError("lambda weights must lie in [0, 1]")
        if abs(self.lambda1 + self.lambda2 - 1.0) > SIMPLEX_TOL:
            raise ValueError("lambda1 + lambda2 must equal 1")


@dataclass(frozen=True)
class FusedVoxel:
    masses: Gpma
    reliability: float
    hard_label: int  # class index, or CONTENTIOUS


@dataclass(frozen=True)
class FusedLabelMap:
    """Dense fusion output over an (H, W, L) volume with K classes."""

    dims: tuple[int, int, int]
    k: int
    singletons: np.ndarray  # (K, H, W, L)
    multiset: np.ndarray  # (H, W, L)
    reliability: np.ndarray  # (H, W, L)
    labels: np.ndarray  # (H, W, L) uint16, CONTENTIOUS where masked

    def voxel(self, i: int, j: int, k: int) -> FusedVoxel:
        masses = Gpma(
            b_singletons=self.singletons[:, i, j, k],
            b_multiset=float(self.multiset[i, j, k]),
            k_card=self.k,
        )
        return FusedVoxel(
            masses=masses,
            reliability=float(self.reliability[i, j, k]),
            hard_label=int(self.labels[i, j, k]),
        )


def _interaction_coeff(rule: FusionRule, k: int) -> float:
    # Singletons have cardinality 1, the multi-set cardinality K.
    return 1.0 / (1.0 + k) if rule is FusionRule.CAEF else 1.0


def fuse_mass_arrays(
    a_singletons: np.ndarray,
    a_multiset: np.ndarray,
    b_singletons: np.ndarray,
    b_multiset: np.ndarray,
    rule: FusionRule = FusionRule.CAEF,
) -> tuple[np.ndarray, np.ndarray]:
    """Fuse batched mass assignments of shape (V, K) / (V,).

    Returns normalized fused (singletons, multiset). Raises if any voxel
    pair is totally conflicting (zero raw mass everywhere), which can only
    happen for dogmatic inputs with disjoint support.
    """
    a_s = np.asarray(a_singletons, dtype=np.float64)
    b_s = np.asarray(b_singletons, dtype=np.float64)
    a_m = np.asarray(a_multiset, dtype=np.float64)
    b_m = np.asarray(b_multiset, dtype=np.float64)
    if a_s.shape != b_s.shape:
        raise ValueError("singleton mass shapes differ")
    coeff = _interaction_coeff(rule, a_s.shape[-1])
    raw_s = a_s * b_s + coeff * (a_s * b_m[..., None] + b_s * a_m[..., None])
    raw_m = a_m * b_m
    total = raw_s.sum(axis=-1) + raw_m
    if np.any(total <= 0.0):
        raise ValueError("totally conflicting dogmatic assignments cannot be fused")
    return raw_s / total[..., None], raw_m / total


def _fuse_voxel(a: Gpma, b: Gpma, rule: FusionRule) -> Gpma:
    if a.k != b.k:
        raise ValueError("class counts differ")
    s, m = fuse_mass_arrays(
        a.b_singletons[None, :], np.array([a.b_multiset]),
        b.b_singletons[None, :], np.array([b.b_multiset]),
        rule,
    )
    return Gpma(b_singletons=s[0], b_multiset=float(m[0]), k_card=a.k)


def caef_fuse_voxel(a: Gpma, b: Gpma) -> Gpma:
    """Class-aware fusion of two mass assignments (symmetric, normalized)."""
    return _fuse_voxel(a, b, FusionRule.CAEF)


def ef_fuse_voxel(a: Gpma, b: Gpma) -> Gpma:
    """Plain evidential fusion: full singleton/multi-set interaction."""
    return _fuse_voxel(a, b, FusionRule.EF)


def reliability_field(singletons: np.ndarray, multiset: np.ndarray) -> np.ndarray:
    """R = exp(multiset * sum_n zeta_n log2 zeta_n) with 0 log 0 := 0.

    The zeta_n are the fused singleton masses, kept unnormalized (they sum
    to 1 - multiset). R lies in (0, 1]: the exponent is non-positive and
    vanishes when the multiset mass is zero or the singletons are one-hot.
    """
    s = np.asarray(singletons, dtype=np.float64)
    pos = s > 0.0
    ent = np.where(pos, s * np.log2(np.where(pos, s, 1.0)), 0.0).sum(axis=-1)
    return np.exp(np.asarray(multiset, dtype=np.float64) * ent)


def reliability(fused: Gpma) -> float:
    """Reliability of a single fused assignment."""
    return float(
        reliability_field(fused.b_singletons[None, :], np.array([fused.b_multiset]))[0]
    )


def blend_uncertainty(own_u, fused_u, cfg: FusionConfig):
    """Weighted blend lambda1 * own + lambda2 * fused, elementwise."""
    own = np.asarray(own_u, dtype=np.float64)
    fused = np.asarray(fused_u, dtype=np.float64)
    if np.any(own < 0.0) or np.any(own > 1.0) or np.any(fused < 0.0) or np.any(fused > 1.0):
        raise ValueError("uncertainties must lie in [0, 1]")
    out = cfg.lambda1 * own + cfg.lambda2 * fused
    return float(out) if out.ndim == 0 else out


def resolve_threads(n_threads: int | None = None) -> int:
    """Thread count: explicit argument, else MEVL_THREADS, else CPU count."""
    if n_threads is None:
        env = os.environ.get("MEVL_THREADS")
        n_threads = int(env) if env else (os.cpu_count() or 1)
    if n_threads < 1:
        raise ValueError("thread count must be >= 1")
    return n_threads


def fuse_volumes(
    evidence_a: np.ndarray,
    evidence_b: np.ndarray,
    cfg: FusionConfig = FusionConfig(),
    reliability_threshold: float = 0.0,
    n_threads: int | None = None,
) -> FusedLabelMap:
    """Fuse two (K, H, W, L) evidence volumes into labels and reliability.

    Per voxel: evidence -> belief -> generalized masses, fused under
    ``cfg.rule``; the hard label is the argmax singleton (ties to the
    lowest class index) where reliability >= threshold and CONTENTIOUS
    elsewhere. Voxels are independent, so the chunked thread pool produces
    bit-identical output for any thread count.
    """
    a = np.asarray(evidence_a, dtype=np.float64)
    b = np.asarray(evidence_b, dtype=np.float64)
    if a.ndim != 4 or b.ndim != 4:
        raise ValueError("evidence volumes must have shape (K, H, W, L)")
    if a.shape != b.shape:
        raise ValueError(f"evidence shapes differ: {a.shape} vs {b.shape}")
    if not 0.0 <= reliability_threshold <= 1.0:
        raise ValueError("reliability threshold must lie in [0, 1]")
    k = a.shape[0]
    if k < 2:
        raise ValueError("need at least two classes")
    if k >= CONTENTIOUS:
        raise ValueError("class count collides with the contentious sentinel")
    dims = a.shape[1:]
    n_vox = int(np.prod(dims))

    a_flat = np.moveaxis(a, 0, -1).reshape(n_vox, k)
    b_flat = np.moveaxis(b, 0, -1).reshape(n_vox, k)

    singles = np.empty((n_vox, k), dtype=np.float64)
    multi = np.empty(n_vox, dtype=np.float64)
    rel = np.empty(n_vox, dtype=np.float64)
    labels = np.empty(n_vox, dtype=np.uint16)

    def run(lo: int, hi: int) -> None:
        sa, ua = belief_field(a_flat[lo:hi])
        sb, ub = belief_field(b_flat[lo:hi])
        fs, fm = fuse_mass_arrays(sa, ua, sb, ub, cfg.rule)
        r = reliability_field(fs, fm)
        lab = np.argmax(fs, axis=-1).astype(np.uint16)
        lab[r < reliability_threshold] = CONTENTIOUS
        singles[lo:hi] = fs
        multi[lo:hi] = fm
        rel[lo:hi] = r
        labels[lo:hi] = lab

    n_threads = resolve_threads(n_threads)
    if n_threads == 1 or n_vox < 4096:
        run(0, n_vox)
    else:
        chunk = -(-n_vox // n_threads)
        bounds = [(i, min(i + chunk, n_vox)) for i in range(0, n_vox, chunk)]
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(lambda be: run(*be), bounds))

    return FusedLabelMap(
        dims=tuple(dims),
        k=k,
        singletons=np.moveaxis(singles.reshape(*dims, k), -1, 0),
        multiset=multi.reshape(dims),
        reliability=rel.reshape(dims),
        labels=labels.reshape(dims),
    )
