"""Pfaffian of real antisymmetric matrices.

Uses Householder reduction to skew-symmetric tridiagonal form,
``A = Q T Q^T``, so that ``Pf(A) = det(Q) * prod(T[2i, 2i+1])``.
Each Householder reflection contributes a factor -1 to ``det(Q)``.
"""

from __future__ import annotations

import numpy as np


def pfaffian(a: np.ndarray, check: bool = True) -> float:
    """Pfaffian of a real antisymmetric ``(2n, 2n)`` matrix.

    Odd dimension returns 0. The empty matrix has Pfaffian 1.
    """
    a = np.array(a, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("pfaffian needs a square matrix")
    n = a.shape[0]
    if check and n and not np.allclose(a, -a.T, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ValueError("matrix is not antisymmetric")
    if n == 0:
        return 1.0
    if n % 2:
        return 0.0

    result = 1.0
    for k in range(0, n - 2, 2):
        # zero out a[k+2:, k] with a reflection acting on rows/cols k+1..n-1
        x = a[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            return 0.0
        if x[1:].any():
            sign = 1.0 if x[0] >= 0 else -1.0
            v = x.copy()
            v[0] += sign * alpha
            v /= np.linalg.norm(v)
            sub = a[k + 1:, k:]
            sub -= 2.0 * np.outer(v, v @ sub)
            sub = a[k:, k + 1:]
            sub -= 2.0 * np.outer(sub @ v, v)
            result = -result
        result *= a[k, k + 1]
    return float(result * a[n - 2, n - 1])
