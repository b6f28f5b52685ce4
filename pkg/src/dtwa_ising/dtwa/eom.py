"""Semi-classical equations of motion for ``H = -J sum X X - h sum Z``.

Heisenberg's equation gives, per site,

    d sigma^a_i / dt = M[a, c] sigma^c_i + E[a, c] sigma^c_i sum_delta X_{i+delta}

with ``M[a, c] = 2 h eps[z, a, c]`` and ``E[a, c] = 2 J eps[x, a, c]``.
First order replaces every operator by a classical variable. Second order
keeps connected pair correlators ``c[a, b, i, j]`` and drops connected
three-point cumulants.

Everything here is written with elementwise numpy operations only, so a
trajectory's result does not depend on which batch it was evaluated in.
Arrays are batched: spins have shape ``(..., 3, N)`` and correlators
``(..., 3, 3, N, N)``.
"""

from __future__ import annotations

import numpy as np

X, Y, Z = 0, 1, 2


def neighbour_sum(x: np.ndarray) -> np.ndarray:
    """``x_{i-1} + x_{i+1}`` with periodic wrap (for ``N = 2`` that is ``2 x_other``)."""
    return np.roll(x, 1, axis=-1) + np.roll(x, -1, axis=-1)


def first_order_rhs(s: np.ndarray, h: float, j: float = 1.0) -> np.ndarray:
    """Time derivative of classical spins ``s`` with shape ``(..., 3, N)``."""
    sx, sy, sz = s[..., X, :], s[..., Y, :], s[..., Z, :]
    nb = neighbour_sum(sx)
    out = np.empty_like(s)
    out[..., X, :] = 2.0 * h * sy
    out[..., Y, :] = -2.0 * h * sx + 2.0 * j * sz * nb
    out[..., Z, :] = -2.0 * j * sy * nb
    return out


def classical_energy(s: np.ndarray, h: float, j: float = 1.0) -> np.ndarray:
    """Weyl-symbol energy ``-J sum s^x_i s^x_{i+1} - h sum s^z_i``."""
    sx = s[..., X, :]
    return -j * np.sum(sx * np.roll(sx, -1, axis=-1), axis=-1) - h * np.sum(s[..., Z, :], axis=-1)


def second_order_rhs(s: np.ndarray, c: np.ndarray, h: float, j: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Derivatives ``(ds, dc)`` of means ``s (..., 3, N)`` and connected pairs ``c (..., 3, 3, N, N)``.

    ``c`` must be symmetric under ``(a, i) <-> (b, j)`` with zero diagonal
    blocks ``i = j``; the returned ``dc`` has the same structure.

    Writing ``dc[a, b, i, j] = F[a, b, i, j] + F[b, a, j, i]``, the one-sided
    part is ``F = M c + E G`` with, for ``j`` not adjacent to ``i``,

        G[c, b, i, j] = sum_delta (c[c, b, i, j] X_{i+delta} + s^c_i c[x, b, i+delta, j])

    and for ``j = i + delta`` the three-point term involves a single site
    product and reduces to ``delta_{bx} s^c_i - s^c_i X_j s^b_j - c[c, x, i, j] s^b_j``.
    """
    n = s.shape[-1]
    sites = np.arange(n)
    x = s[..., X, :]
    nb = neighbour_sum(x)
    cx = c[..., X, :, :, :]  # c[x, b, i, j]

    # mean fields: sum over neighbours of <sigma^c_i X_{i+delta}>
    cx_nb = c[..., :, X, sites, (sites + 1) % n] + c[..., :, X, sites, (sites - 1) % n]
    field = s * nb[..., None, :] + cx_nb
    ds = np.empty_like(s)
    ds[..., X, :] = 2.0 * h * s[..., Y, :]
    ds[..., Y, :] = -2.0 * h * s[..., X, :] + 2.0 * j * field[..., Z, :]
    ds[..., Z, :] = -2.0 * j * field[..., Y, :]

    # only the y and z rows of G enter F
    cx_shift = np.roll(cx, -1, axis=-2) + np.roll(cx, 1, axis=-2)
    nb_i = nb[..., None, :, None]
    g = {}
    for comp in (Y, Z):
        s_c = s[..., comp, :][..., None, :, None]
        g[comp] = c[..., comp, :, :, :] * nb_i + s_c * cx_shift
    for delta in (1, -1):
        cols = (sites + delta) % n
        xj = x[..., cols]  # X_j on the band j = i + delta
        sb_j = s[..., :, cols]  # s^b_j, (..., 3, N)
        for comp in (Y, Z):
            s_c = s[..., comp, :]
            # the slice between advanced indices moves the band axis to the front
            band = np.moveaxis(c[..., comp, :, sites, cols], 0, -1)  # (..., 3, N)
            c_cx = c[..., comp, X, sites, cols]  # (..., N)
            corr = -band * xj[..., None, :] - (s_c * xj)[..., None, :] * sb_j - c_cx[..., None, :] * sb_j
            corr[..., X, :] += s_c
            g[comp][..., :, sites, cols] += corr
    f = np.empty_like(c)
    f[..., X, :, :, :] = 2.0 * h * c[..., Y, :, :, :]
    f[..., Y, :, :, :] = -2.0 * h * c[..., X, :, :, :] + 2.0 * j * g[Z]
    f[..., Z, :, :, :] = -2.0 * j * g[Y]
    dc = f + np.swapaxes(np.swapaxes(f, -1, -2), -3, -4)
    dc[..., sites, sites] = 0.0
    return ds, dc


def second_order_correlations(s: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Full ``<sigma^x_i sigma^x_j>`` matrix, ``(..., N, N)``, with ones on the diagonal."""
    x = s[..., X, :]
    full = x[..., :, None] * x[..., None, :] + c[..., X, X, :, :]
    diag = np.arange(s.shape[-1])
    full[..., diag, diag] = 1.0
    return full


# --- flat packing for the integrator ----------------------------------------


def state_size(n: int, order: int) -> int:
    return 3 * n if order == 1 else 3 * n + 9 * n * n


def pack(s: np.ndarray, c: np.ndarray | None = None) -> np.ndarray:
    batch = s.shape[:-2]
    flat = s.reshape(batch + (-1,))
    if c is None:
        return flat.copy()
    return np.concatenate([flat, c.reshape(batch + (-1,))], axis=-1)


def unpack(y: np.ndarray, n: int, order: int):
    batch = y.shape[:-1]
    s = y[..., : 3 * n].reshape(batch + (3, n))
    if order == 1:
        return s, None
    return s, y[..., 3 * n :].reshape(batch + (3, 3, n, n))


def flat_rhs(n: int, order: int, h: float, j: float = 1.0):
    """Right-hand side ``f(y)`` acting on packed states of shape ``(B, D)``."""
    if order == 1:
        def rhs(y):
            s, _ = unpack(y, n, 1)
            return first_order_rhs(s, h, j).reshape(y.shape)
    elif order == 2:
        def rhs(y):
            s, c = unpack(y, n, 2)
            ds, dc = second_order_rhs(s, c, h, j)
            return pack(ds, dc)
    else:
        raise ValueError("order must be 1 or 2")
    return rhs
