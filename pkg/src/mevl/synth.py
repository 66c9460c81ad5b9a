"""Synthetic ground truth and paired noisy evidence for two sources.

Ground truth is a union of axis-aligned ellipsoids per foreground class.
Each simulated source emits per-class evidence ``max(0, gain * 1{class
correct} + sigma * z)`` with standard-normal ``z`` obtained by inverse-CDF
from uniform draws. Optional per-source bias modes inject systematic,
complementary errors:

* ``BOUNDARY_BLUR``: near label boundaries the source loses most of its
  correct-class evidence to the adjacent class, becoming uncertain and
  slightly wrong exactly where segmentation is hardest.
* ``CLASS_SWAP_PATCH``: inside a random axis-aligned patch the source
  moves most of its correct-class evidence to the next class, i.e. it is
  confidently wrong there while keeping a minority of correct evidence.

All randomness comes from a single PCG64 stream seeded from the spec, so
outputs are bit-identical across runs and platforms for the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtri


class BiasMode(Enum):
    NONE = "none"
    BOUNDARY_BLUR = "boundary_blur"
    CLASS_SWAP_PATCH = "class_swap_patch"


# Bias shape parameters: fraction of correct evidence kept at blurred
# boundaries / inside swap patches, and the patch half-extent per axis.
BLUR_KEEP = 0.25
BLUR_LEAK = 0.25
SWAP_KEEP = 0.3
PATCH_HALF_FRAC = 0.22
# Ambient evidence on every class, added after the noise clip. Softplus
# heads never emit exact zeros; without the floor a clipped channel would
# hard-veto its class in any bilinear fusion.
FLOOR_FRAC = 0.05


@dataclass(frozen=True)
class PhantomSpec:
    dims: tuple[int, int, int] = (20, 20, 12)
    k: int = 2
    n_blobs: int = 3
    sigma_a: float = 0.5
    sigma_b: float = 0.5
    bias_a: BiasMode = BiasMode.NONE
    bias_b: BiasMode = BiasMode.NONE
    gain_a: float = 1.5
    gain_b: float = 1.5
    seed: int = 0

    def __post_init__(self):
        if len(self.dims) != 3 or min(self.dims) < 8:
            raise ValueError("phantom dims must be >= 8 per axis")
        if self.k < 2:
            raise ValueError("need at least two classes")
        if self.n_blobs < 1:
            raise ValueError("need at least one blob per class")
        if min(self.sigma_a, self.sigma_b) < 0 or min(self.gain_a, self.gain_b) <= 0:
            raise ValueError("noise must be >= 0 and gains > 0")


def _standard_normal(rng: np.random.Generator, shape) -> np.ndarray:
    # Inverse-CDF transform keeps the draw count independent of values,
    # unlike rejection samplers, so streams stay aligned across platforms.
    u = rng.random(shape)
    return ndtri(np.clip(u, 1e-12, 1.0 - 1e-12))


def _ellipsoid_labels(spec: PhantomSpec, rng: np.random.Generator) -> np.ndarray:
    dims = np.asarray(spec.dims, dtype=np.float64)
    grid = np.stack(
        np.meshgrid(*(np.arange(d, dtype=np.float64) for d in spec.dims), indexing="ij"),
        axis=-1,
    )
    gt = np.zeros(spec.dims, dtype=np.int64)
    for cls in range(1, spec.k):
        for _ in range(spec.n_blobs):
            center = rng.uniform(0.25, 0.75, size=3) * dims
            semi = rng.uniform(0.12, 0.3, size=3) * dims
            inside = (((grid - center) / semi) ** 2).sum(axis=-1) <= 1.0
            gt[inside] = cls
    return gt


def _boundary_and_neighbor(gt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Boundary voxels plus the first differing six-neighbor's label."""
    padded = np.pad(gt, 1, mode="edge")
    shifts = (
        padded[:-2, 1:-1, 1:-1],
        padded[2:, 1:-1, 1:-1],
        padded[1:-1, :-2, 1:-1],
        padded[1:-1, 2:, 1:-1],
        padded[1:-1, 1:-1, :-2],
        padded[1:-1, 1:-1, 2:],
    )
    boundary = np.zeros(gt.shape, dtype=bool)
    neighbor = gt.copy()
    for sh in reversed(shifts):  # earlier axes win the tie
        differs = sh != gt
        boundary |= differs
        neighbor = np.where(differs, sh, neighbor)
    return boundary, neighbor


def _base_evidence(gt: np.ndarray, k: int, gain: float) -> np.ndarray:
    base = np.zeros((k,) + gt.shape, dtype=np.float64)
    for cls in range(k):
        base[cls][gt == cls] = gain
    return base


def _apply_bias(
    base: np.ndarray,
    gt: np.ndarray,
    mode: BiasMode,
    gain: float,
    rng: np.random.Generator,
) -> np.ndarray:
    k = base.shape[0]
    if mode is BiasMode.BOUNDARY_BLUR:
        boundary, neighbor = _boundary_and_neighbor(gt)
        ii, jj, ll = np.nonzero(boundary)
        base[gt[boundary], ii, jj, ll] = BLUR_KEEP * gain
        base[neighbor[boundary], ii, jj, ll] = BLUR_LEAK * gain
    elif mode is BiasMode.CLASS_SWAP_PATCH:
        dims = np.asarray(gt.shape)
        center = rng.uniform(0.3, 0.7, size=3) * dims
        half = np.maximum(2, (PATCH_HALF_FRAC * dims).astype(int))
        lo = np.maximum(0, (center - half).astype(int))
        hi = np.minimum(dims, (center + half).astype(int))
        patch = tuple(slice(a, b) for a, b in zip(lo, hi))
        sub = gt[patch]
        wrong = (sub + 1) % k
        for cls in range(k):
            own = sub == cls
            base[(cls,) + patch][own] = SWAP_KEEP * gain
        for cls in range(k):
            tgt = wrong == cls
            base[(cls,) + patch][tgt] += (1.0 - SWAP_KEEP) * gain
    return base


def generate_labels(spec: PhantomSpec) -> np.ndarray:
    """Ground-truth label volume only (same layout draws as the phantom)."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    return _ellipsoid_labels(spec, rng)


def generate_phantom(spec: PhantomSpec):
    """Return (gt labels, evidence_a, evidence_b).

    Evidence arrays have shape (K, H, W, L) and are non-negative; gt holds
    labels in 0..K-1. Output is a pure function of the spec.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    gt = _ellipsoid_labels(spec, rng)
    out = []
    for sigma, bias, gain in (
        (spec.sigma_a, spec.bias_a, spec.gain_a),
        (spec.sigma_b, spec.bias_b, spec.gain_b),
    ):
        base = _base_evidence(gt, spec.k, gain)
        base = _apply_bias(base, gt, bias, gain, rng)
        noise = sigma * _standard_normal(rng, base.shape)
        out.append(np.maximum(0.0, base + noise) + FLOOR_FRAC * gain)
    return gt, out[0], out[1]


def generate_intensity(gt: np.ndarray, k: int, sigma: float, seed: int) -> np.ndarray:
    """Class-dependent intensity volume with Gaussian noise, for demos."""
    rng = np.random.Generator(np.random.PCG64(seed))
    means = np.linspace(0.2, 0.8, k)
    return means[gt] + sigma * _standard_normal(rng, gt.shape)
