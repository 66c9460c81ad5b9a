"""Polygamma helpers used by the evidential losses.

Only the first two derivatives of digamma are needed: trigamma (psi_1)
and tetragamma (psi_2).  Both are computed by shifting the argument above
10 with the forward recurrence and summing the Bernoulli asymptotic
series there; this is accurate to better than 1e-13 relative for x >= 1e-3
(validated against mpmath in the test suite).
"""

from __future__ import annotations

import numpy as np

# Bernoulli numbers B_2 .. B_14.
_BERN = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)

_SHIFT = 10.0


def _prepare(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr).copy()
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError("polygamma argument must be finite and > 0")
    return arr, scalar


def trigamma(x):
    """psi_1(x) = d^2/dx^2 log Gamma(x), elementwise."""
    xs, scalar = _prepare(x)
    acc = np.zeros_like(xs)
    while True:
        small = xs < _SHIFT
        if not small.any():
            break
        acc[small] += 1.0 / (xs[small] * xs[small])
        xs[small] += 1.0
    inv = 1.0 / xs
    u = inv * inv
    # 1/x + 1/(2x^2) + (1/x^3) * (B2 + B4 u + B6 u^2 + ...)
    tail = np.zeros_like(xs)
    for b in reversed(_BERN):
        tail = tail * u + b
    val = acc + inv + 0.5 * u + inv * u * tail
    return float(val[0]) if scalar else val


def tetragamma(x):
    """psi_2(x) = d psi_1 / dx, elementwise (negative for x > 0)."""
    xs, scalar = _prepare(x)
    acc = np.zeros_like(xs)
    while True:
        small = xs < _SHIFT
        if not small.any():
            break
        acc[small] -= 2.0 / xs[small] ** 3
        xs[small] += 1.0
    inv = 1.0 / xs
    u = inv * inv
    # -(1/x^2 + 1/x^3 + (1/x^4) * (3 B2 + 5 B4 u + 7 B6 u^2 + ...))
    tail = np.zeros_like(xs)
    for k in range(len(_BERN) - 1, -1, -1):
        tail = tail * u + (2 * k + 3) * _BERN[k]
    val = acc - (u + inv * u + u * u * tail)
    return float(val[0]) if scalar else val
