"""Batched explicit Runge-Kutta integration of independent trajectories.

Each row of a ``(B, D)`` state array is its own trajectory with its own
step size, so accepting or rejecting a step in one row never changes
another row. Steps are clipped to land exactly on the output times.

Two schemes are available: adaptive Dormand-Prince 5(4) (default) and
fixed-step classical RK4 as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

DEFAULT_TOL = 1e-8
RK4_STEP = 1e-3
BLOWUP = 1e3
MIN_STEP = 1e-12
MAX_STEPS = 10_000_000
ABS_FLOOR = 1e-3  # absolute part of the error scale, relative to tol

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class InstabilityError(ArithmeticError):
    """A trajectory left the region where its equations make sense."""


@dataclass
class BatchTrajectory:
    """States at the output times for a batch of trajectories.

    ``states`` has shape ``(T, B, K)`` (``K = D`` unless an observable map
    was given); rows after a trajectory's last valid
    index are NaN. ``valid_until[b]`` is the number of valid output times.
    """

    times: np.ndarray
    states: np.ndarray
    valid_until: np.ndarray
    unstable: np.ndarray
    steps: np.ndarray
    rejected: np.ndarray

    def valid_mask(self) -> np.ndarray:
        """Boolean ``(T, B)``: output ``t`` of trajectory ``b`` is valid."""
        return np.arange(self.times.size)[:, None] < self.valid_until[None, :]


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray, tol: float) -> np.ndarray:
    scale = tol * (ABS_FLOOR + np.maximum(np.abs(y0), np.abs(y1)))
    return np.max(np.abs(err) / scale, axis=1)


def integrate_batch(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    times,
    tol: float = DEFAULT_TOL,
    method: str = "dp5",
    constraint: Callable[[np.ndarray], np.ndarray] | None = None,
    constraint_tol: float = 1e-6,
    blowup: float = BLOWUP,
    first_step: float = 1e-3,
    observe: Callable[[np.ndarray], np.ndarray] | None = None,
) -> BatchTrajectory:
    """Integrate ``dy/dt = rhs(y)`` from ``t = 0`` and record ``y`` at ``times``.

    ``constraint(y)`` (optional) returns a per-row violation; adaptive steps
    whose result violates it by more than ``constraint_tol`` are retried
    with a smaller step. A row whose entries exceed ``blowup`` in magnitude,
    turn non-finite, or need a step below ``MIN_STEP`` is flagged unstable
    and frozen at its last valid output.

    ``observe(y)`` maps ``(b, D)`` states to ``(b, K)`` features; when given,
    only the features are stored.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("output times must be non-negative and strictly increasing")
    if method not in ("dp5", "rk4"):
        raise ValueError("method must be 'dp5' or 'rk4'")
    y = np.array(y0, dtype=float, copy=True)
    if y.ndim != 2:
        raise ValueError("initial state must have shape (B, D)")
    nb = y.shape[0]
    if observe is None:
        observe = _identity
    width = observe(y[:1]).shape[1]
    out = np.full((times.size, nb, width), np.nan)
    t = np.zeros(nb)
    h = np.full(nb, RK4_STEP if method == "rk4" else first_step)
    nxt = np.zeros(nb, dtype=int)  # index of the next output time
    unstable = np.zeros(nb, dtype=bool)
    steps = np.zeros(nb, dtype=int)
    rejected = np.zeros(nb, dtype=int)

    def record(rows):
        # store outputs for every row whose time has reached its next target
        while True:
            hit = rows[(nxt[rows] < times.size)]
            hit = hit[t[hit] == times[nxt[hit]]]
            if hit.size == 0:
                return
            out[nxt[hit], hit] = observe(y[hit])
            nxt[hit] += 1

    record(np.arange(nb))
    # derivative at the current point; Dormand-Prince's last stage reuses it
    f_cur = rhs(y) if method == "dp5" else None
    for _ in range(MAX_STEPS):
        active = np.flatnonzero((nxt < times.size) & ~unstable)
        if active.size == 0:
            break
        ya, ta = y[active], t[active]
        target = times[nxt[active]]
        step = np.minimum(h[active], target - ta)
        lands = step == target - ta
        if method == "rk4":
            y_new = _rk4_step(rhs, ya, step)
            accept = np.ones(active.size, dtype=bool)
            h_next = h[active]
        else:
            y_new, err, f_new = _dp5_step(rhs, ya, step, f_cur[active])
            norm = _error_norm(err, ya, y_new, tol)
            accept = norm <= 1.0
            if constraint is not None:
                accept &= constraint(y_new) <= constraint_tol
            with np.errstate(divide="ignore", invalid="ignore"):
                factor = np.where(norm > 0, 0.9 * norm ** -0.2, 5.0)
            factor = np.clip(np.nan_to_num(factor, nan=0.2), 0.2, 5.0)
            factor = np.where(accept, factor, np.minimum(factor, 0.5))
            # a clipped landing step says little about the natural step size
            h_next = np.where(accept & lands, np.maximum(h[active], step * factor), step * factor)
        bad = ~np.all(np.isfinite(y_new), axis=1) | (np.max(np.abs(np.nan_to_num(y_new, nan=np.inf)), axis=1) > blowup)
        accept &= ~bad
        too_small = ~accept & (h_next < MIN_STEP)
        unstable[active[bad | too_small]] = True
        rejected[active[~accept]] += 1
        good = active[accept]
        y[good] = y_new[accept]
        if f_cur is not None:
            f_cur[good] = f_new[accept]
        t[good] = np.where(lands[accept], target[accept], ta[accept] + step[accept])
        steps[good] += 1
        h[active] = h_next
        record(good)
    else:
        raise RuntimeError("step budget exhausted")
    return BatchTrajectory(times, out, nxt.copy(), unstable, steps, rejected)


def _identity(y):
    return y


def _dp5_step(rhs, y, h, f0):
    hc = h[:, None]
    k = [f0]
    for i in range(1, 7):
        acc = np.zeros_like(y)
        for a, kj in zip(_A[i], k):
            if a:
                acc = acc + a * kj
        arg = y + hc * acc
        k.append(rhs(arg))
    # the last stage row equals the fifth-order weights, so arg is y5 itself
    err = np.zeros_like(y)
    for e, kj in zip(_E, k):
        err = err + e * kj
    return arg, hc * err, k[6]


def _rk4_step(rhs, y, h):
    hc = h[:, None]
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * hc * k1)
    k3 = rhs(y + 0.5 * hc * k2)
    k4 = rhs(y + hc * k3)
    return y + hc * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def integrate_trajectory(rhs, y0: np.ndarray, times, **kwargs) -> np.ndarray:
    """Single-trajectory convenience wrapper; raises if the trajectory went unstable."""
    res = integrate_batch(rhs, np.asarray(y0, dtype=float)[None, :], times, **kwargs)
    if res.unstable[0]:
        t_last = res.times[res.valid_until[0] - 1] if res.valid_until[0] else 0.0
        raise InstabilityError(f"trajectory unstable after t = {t_last}")
    return res.states[:, 0]
