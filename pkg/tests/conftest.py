import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def random_gpma_arrays(rng, n, k, dogmatic=False):
    """Batched random mass assignments (singletons (n,k), multiset (n,))."""
    raw = rng.uniform(0.01, 1.0, size=(n, k + 1))
    raw /= raw.sum(axis=1, keepdims=True)
    if dogmatic:
        raw[:, -1] = 0.0
        raw /= raw.sum(axis=1, keepdims=True)
    return raw[:, :k], raw[:, k]


def dyadic_gpma_arrays(rng, n, k, denom_bits=20):
    """Masses that are exact dyadic rationals summing to exactly 1.0."""
    denom = 1 << denom_bits
    cuts = np.sort(rng.integers(1, denom, size=(n, k)), axis=1)
    parts = np.diff(np.concatenate([np.zeros((n, 1), dtype=np.int64), cuts,
                                    np.full((n, 1), denom, dtype=np.int64)], axis=1), axis=1)
    masses = parts / denom
    return masses[:, :k], masses[:, k]
