"""Evidence -> belief mapping for per-class evidence vectors.

A model emits a non-negative evidence value e_n for each of K classes.
Evidence parameterizes a Dirichlet with alpha_n = e_n + 1 and strength
S = sum(alpha); belief masses are b_n = e_n / S and the residual
u = K / S is the uncertainty mass, so sum(b) + u = 1.

The generalized assignment (:class:`Gpma`) reinterprets u as mass placed
on the multi-set of all K classes, which is the form consumed by the
fusion rules in :mod:`mevl.fusion`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Validation absorbs round-trip noise: masses within this of zero are
# clamped to exactly zero.
MASS_FLOOR = 1e-15
SIMPLEX_TOL = 1e-12


def _as_mass_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _clamp_floor(arr: np.ndarray) -> np.ndarray:
    arr = arr.copy()
    arr[np.abs(arr) < MASS_FLOOR] = 0.0
    return arr


@dataclass(frozen=True)
class EvidenceVector:
    """Non-negative evidence over K >= 2 classes for a single voxel."""

    e: np.ndarray

    def __post_init__(self):
        e = _as_mass_vector(self.e, "evidence")
        if e.size < 2:
            raise ValueError("evidence needs at least two classes")
        if np.any(e < 0.0):
            raise ValueError("evidence must be non-negative")
        object.__setattr__(self, "e", e)

    @property
    def k(self) -> int:
        return self.e.size


@dataclass(frozen=True)
class BeliefAssignment:
    """Per-class belief masses b plus uncertainty mass u, summing to one."""

    b: np.ndarray
    u: float

    def __post_init__(self):
        b = _clamp_floor(_as_mass_vector(self.b, "belief"))
        u = float(self.u)
        if abs(u) < MASS_FLOOR:
            u = 0.0
        if np.any(b < 0.0) or u < 0.0:
            raise ValueError("belief masses must be non-negative")
        total = float(b.sum() + u)
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"belief masses sum to {total}, expected 1")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "u", u)

    @property
    def k(self) -> int:
        return self.b.size


@dataclass(frozen=True)
class DirichletParams:
    """Dirichlet concentration alpha (alpha_n = e_n + 1 >= 1) and strength."""

    alpha: np.ndarray
    strength: float | None = None  # computed from alpha when omitted

    def __post_init__(self):
        alpha = _as_mass_vector(self.alpha, "alpha")
        if np.any(alpha < 1.0):
            raise ValueError("alpha entries must be >= 1")
        s = float(alpha.sum()) if self.strength is None else float(self.strength)
        if abs(s - float(alpha.sum())) > SIMPLEX_TOL * max(1.0, s):
            raise ValueError("strength does not match sum(alpha)")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "strength", s)

    @property
    def k(self) -> int:
        return self.alpha.size

    @property
    def probabilities(self) -> np.ndarray:
        return self.alpha / self.strength


@dataclass(frozen=True)
class Gpma:
    """Generalized probability mass assignment.

    Singleton masses over the K classes plus one mass on the multi-set of
    all K classes (cardinality ``k_card == K``); the multi-set mass is the
    uncertainty of the originating belief assignment.
    """

    b_singletons: np.ndarray
    b_multiset: float
    k_card: int

    def __post_init__(self):
        s = _clamp_floor(_as_mass_vector(self.b_singletons, "singleton masses"))
        m = float(self.b_multiset)
        if abs(m) < MASS_FLOOR:
            m = 0.0
        if np.any(s < 0.0) or m < 0.0:
            raise ValueError("masses must be non-negative")
        total = float(s.sum() + m)
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"masses sum to {total}, expected 1")
        if int(self.k_card) != s.size:
            raise ValueError("k_card must equal the number of singleton classes")
        object.__setattr__(self, "b_singletons", s)
        object.__setattr__(self, "b_multiset", m)
        object.__setattr__(self, "k_card", int(self.k_card))

    @property
    def k(self) -> int:
        return self.b_singletons.size


def evidence_to_belief(ev: EvidenceVector) -> BeliefAssignment:
    """b_n = e_n / S and u = K / S with S = sum(e_n + 1)."""
    s = float(ev.e.sum()) + ev.k
    return BeliefAssignment(b=ev.e / s, u=ev.k / s)


def evidence_to_dirichlet(ev: EvidenceVector) -> DirichletParams:
    """alpha_n = e_n + 1; strength is the sum of alpha."""
    alpha = ev.e + 1.0
    return DirichletParams(alpha=alpha, strength=float(alpha.sum()))


def belief_to_gpma(belief: BeliefAssignment, k: int | None = None) -> Gpma:
    """Lift a belief assignment by moving u onto the all-classes multi-set."""
    if k is not None and int(k) != belief.k:
        raise ValueError("class count does not match belief assignment")
    return Gpma(b_singletons=belief.b, b_multiset=belief.u, k_card=belief.k)


def belief_field(evidence: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized evidence -> (belief, uncertainty) over the last axis.

    ``evidence`` has shape (..., K); returns belief of the same shape and
    uncertainty of shape (...,).
    """
    e = np.asarray(evidence, dtype=np.float64)
    if e.shape[-1] < 2:
        raise ValueError("evidence needs at least two classes")
    if not np.all(np.isfinite(e)) or np.any(e < 0.0):
        raise ValueError("evidence must be finite and non-negative")
    k = e.shape[-1]
    s = e.sum(axis=-1) + k
    return e / s[..., None], k / s


def dirichlet_field(evidence: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized evidence -> (alpha, strength) over the last axis."""
    e = np.asarray(evidence, dtype=np.float64)
    if e.shape[-1] < 2:
        raise ValueError("evidence needs at least two classes")
    if not np.all(np.isfinite(e)) or np.any(e < 0.0):
        raise ValueError("evidence must be finite and non-negative")
    alpha = e + 1.0
    return alpha, alpha.sum(axis=-1)
