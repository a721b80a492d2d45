"""Roots of complex polynomials: companion-matrix eigenvalues, then Newton polishing."""

from __future__ import annotations

import numpy as np
from numpy.polynomial import polynomial as P

METHOD = "companion-eigenvalues+newton"


def trim(coeffs, rel: float = 1e-14) -> np.ndarray:
    """Drop vanishing leading coefficients (ascending order input)."""
    c = np.asarray(coeffs, dtype=complex)
    scale = np.max(np.abs(c), initial=0.0)
    while c.size > 1 and abs(c[-1]) <= rel * scale:
        c = c[:-1]
    return c


def companion(coeffs) -> np.ndarray:
    c = trim(coeffs)
    deg = c.size - 1
    a = c[:-1] / c[-1]
    mat = np.zeros((deg, deg), dtype=complex)
    mat[1:, :-1] = np.eye(deg - 1)
    mat[:, -1] = -a
    return mat


def polish(coeffs, z: complex, iters: int = 8) -> complex:
    c = np.asarray(coeffs, dtype=complex)
    dc = P.polyder(c)
    best, best_abs = z, abs(P.polyval(z, c))
    for _ in range(iters):
        d = P.polyval(z, dc)
        if d == 0:
            break
        z = z - P.polyval(z, c) / d
        val = abs(P.polyval(z, c))
        if val < best_abs:
            best, best_abs = z, val
        else:
            break
    return complex(best)


def roots(coeffs) -> np.ndarray:
    """All roots of ``sum_k coeffs[k] z**k``; empty for constants (including zero)."""
    c = trim(coeffs)
    if c.size < 2:
        return np.zeros(0, dtype=complex)
    raw = np.linalg.eigvals(companion(c))
    return np.array([polish(c, z) for z in raw])
