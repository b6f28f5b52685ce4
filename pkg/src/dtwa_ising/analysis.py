"""Derived quantities from correlation series: correlation lengths, residuals,
statistical plateaus, power-law fits and light-cone velocities.

Every function takes a :class:`~dtwa_ising.model.CorrelationSeries` from any
solver. Fits return :class:`FitResult`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .model import CorrelationSeries, DomainError

XI1_WINDOW = (1, 2)
PLATEAU_RANGE = tuple(range(20, 25))
SIGNIFICANCE = 3.0  # entries within this many stderr of zero count as noise
EXACT_FLOOR = 1e-12


class FitError(DomainError):
    """A fit could not be performed on the given data."""


class DegenerateWindowError(FitError):
    pass


class SignChangeError(FitError):
    pass


class NonDecayingError(FitError):
    pass


class NoOscillationError(FitError):
    pass


class GridMismatchError(FitError):
    pass


class RangeError(FitError):
    pass


class NonPositiveInputError(FitError):
    pass


class InsufficientGridError(FitError):
    pass


@dataclass
class FitResult:
    params: dict[str, float]
    errors: dict[str, float]
    window: tuple
    residual_norm: float
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not len(self.window):
            raise ValueError("fit window is empty")
        if any(not (e >= 0) for e in self.errors.values()):
            raise ValueError("uncertainties must be non-negative")

    def __getitem__(self, name: str) -> float:
        return self.params[name]

    def error(self, name: str) -> float:
        return self.errors[name]


def _linear_fit(x, y, sigma=None):
    """Least squares ``y = p0 + p1 x``; returns ``(params, cov, residual_norm)``.

    With ``sigma`` the fit is weighted and the covariance uses the given
    errors as absolute; without, the covariance is scaled by the residual
    variance (zero when the fit is exactly determined).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = np.vstack([np.ones_like(x), x]).T
    w = np.ones_like(x) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)
    aw, yw = a * w[:, None], y * w
    params, *_ = np.linalg.lstsq(aw, yw, rcond=None)
    resid = y - a @ params
    normal_inv = np.linalg.inv(aw.T @ aw)
    if sigma is None:
        dof = x.size - 2
        scale = float(resid @ resid) / dof if dof > 0 else 0.0
        cov = normal_inv * scale
    else:
        cov = normal_inv
    return params, cov, float(np.linalg.norm(resid))


def _column(series: CorrelationSeries, t: float, distances: Sequence[int]):
    i = series.time_index(t)
    cols = []
    for d in distances:
        hit = np.flatnonzero(series.distances == d)
        if hit.size == 0:
            raise RangeError(f"distance {d} not in series")
        cols.append(int(hit[0]))
    return series.values[i, cols], series.stderr[i, cols]


# --- short-distance correlation length --------------------------------------


def fit_xi1(series: CorrelationSeries, t: float, window: Sequence[int] = XI1_WINDOW) -> FitResult:
    """Exponential fit ``|C_d| ~ exp(-d / xi1)`` over ``window`` (default ``d = 1, 2``)."""
    present = [int(d) for d in window if np.any(series.distances == d)]
    vals, errs = _column(series, t, present) if present else (np.array([]), np.array([]))
    usable = vals != 0
    d = np.asarray(present, dtype=float)[usable]
    vals, errs = vals[usable], errs[usable]
    if d.size < 2:
        raise DegenerateWindowError(f"need at least 2 non-zero points in window {tuple(window)}, got {d.size}")
    if np.any(np.sign(vals) != np.sign(vals[0])):
        raise SignChangeError(f"C_d changes sign within the window: {vals}")
    y = np.log(np.abs(vals))
    sigma = errs / np.abs(vals) if np.all(errs > 0) else None
    params, cov, resid = _linear_fit(d, y, sigma)
    slope, s_slope = params[1], math.sqrt(max(cov[1, 1], 0.0))
    if not slope < 0:
        raise NonDecayingError(f"|C_d| does not decay over the window (slope {slope:.3g})")
    xi = -1.0 / slope
    return FitResult(
        {"xi1": xi, "log_amplitude": float(params[0])},
        {"xi1": s_slope / slope**2, "log_amplitude": math.sqrt(max(cov[0, 0], 0.0))},
        tuple(int(v) for v in d),
        resid,
    )


# --- oscillatory envelope ---------------------------------------------------


def _significant(vals, errs):
    floor = np.where(errs > 0, SIGNIFICANCE * errs, EXACT_FLOOR)
    return np.abs(vals) > floor


def fit_xi2_envelope(
    series: CorrelationSeries,
    t: float,
    d_min: int = 3,
    d_max: int | None = None,
    min_sign_changes: int = 3,
) -> FitResult:
    """Exponential fit to the local maxima of ``|C_d|`` in the oscillatory regime.

    Only entries distinguishable from zero (beyond ``3`` standard errors, or
    ``1e-12`` for exact data) take part, so sampling noise does not create
    spurious oscillations.
    """
    d_all = series.distances
    if d_max is None:
        d_max = int(d_all.max())
    keep = (d_all >= d_min) & (d_all <= d_max)
    i = series.time_index(t)
    d = d_all[keep]
    vals, errs = series.values[i, keep], series.stderr[i, keep]
    sig = _significant(vals, errs)
    signs = np.sign(vals[sig])
    changes = int(np.sum(signs[1:] != signs[:-1])) if signs.size else 0
    if changes < min_sign_changes:
        raise NoOscillationError(
            f"{changes} significant sign changes in d = {d_min}..{d_max}; need {min_sign_changes}"
        )
    mag = np.where(sig, np.abs(vals), 0.0)
    peaks = [
        k
        for k in range(1, mag.size - 1)
        if sig[k] and mag[k] >= mag[k - 1] and mag[k] > mag[k + 1]
    ]
    if len(peaks) < 2:
        raise NoOscillationError(f"only {len(peaks)} envelope maxima found")
    dp = d[peaks].astype(float)
    y = np.log(mag[peaks])
    sigma = errs[peaks] / mag[peaks] if np.all(errs[peaks] > 0) else None
    params, cov, resid = _linear_fit(dp, y, sigma)
    slope, s_slope = params[1], math.sqrt(max(cov[1, 1], 0.0))
    if not slope < 0:
        raise NonDecayingError("envelope maxima do not decay")
    xi = -1.0 / slope
    return FitResult(
        {"xi2": xi, "log_amplitude": float(params[0])},
        {"xi2": s_slope / slope**2, "log_amplitude": math.sqrt(max(cov[0, 0], 0.0))},
        tuple(int(v) for v in dp),
        resid,
    )


# --- residuals --------------------------------------------------------------


class Residuals(NamedTuple):
    delta: np.ndarray
    relative: np.ndarray  # NaN where the reference vanishes
    undefined: np.ndarray  # True where the reference vanishes


def residuals(test: CorrelationSeries, reference: CorrelationSeries) -> Residuals:
    """Absolute error ``test - reference`` and relative error ``delta / reference``."""
    if test.values.shape != reference.values.shape:
        raise GridMismatchError(f"shapes differ: {test.values.shape} vs {reference.values.shape}")
    if not np.array_equal(test.distances, reference.distances):
        raise GridMismatchError("distance grids differ")
    if not np.allclose(test.times, reference.times, rtol=0, atol=1e-9):
        raise GridMismatchError("time grids differ")
    delta = test.values - reference.values
    undefined = reference.values == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        relative = np.where(undefined, np.nan, delta / np.where(undefined, 1.0, reference.values))
    return Residuals(delta, relative, undefined)


# --- statistical plateau ----------------------------------------------------


def plateau_value(series: CorrelationSeries, t: float, d_range: Sequence[int] = PLATEAU_RANGE) -> tuple[float, float]:
    """Mean and standard deviation of ``|C_d|`` over ``d_range``."""
    d_range = list(d_range)
    if not d_range:
        raise RangeError("empty distance range")
    vals, _ = _column(series, t, d_range)
    mag = np.abs(vals)
    return float(np.mean(mag)), float(np.std(mag))


def fit_power_law(r_values: Sequence[float], plateaus: Sequence[float]) -> FitResult:
    """``plateau = a R^b`` by least squares on logarithms."""
    r = np.asarray(r_values, dtype=float)
    p = np.asarray(plateaus, dtype=float)
    if r.size != p.size:
        raise ValueError("R and plateau lists differ in length")
    if r.size < 3:
        raise DegenerateWindowError("power-law fit needs at least 3 points")
    if np.any(r <= 0) or np.any(p <= 0):
        raise NonPositiveInputError("power-law fit needs positive R and plateau values")
    params, cov, resid = _linear_fit(np.log(r), np.log(p))
    a = math.exp(params[0])
    return FitResult(
        {"a": a, "b": float(params[1])},
        {"a": a * math.sqrt(max(cov[0, 0], 0.0)), "b": math.sqrt(max(cov[1, 1], 0.0))},
        tuple(float(v) for v in r),
        resid,
    )


# --- light cone -------------------------------------------------------------


def arrival_times(series: CorrelationSeries, distances: Sequence[int], kappa: float = 0.5) -> dict[int, float]:
    """First time ``|C_d(t)|`` reaches ``kappa`` times its maximum over the series.

    Distances whose maximum falls on the last time (front not yet arrived)
    or whose signal vanishes are left out.
    """
    out = {}
    for d in distances:
        col = np.flatnonzero(series.distances == d)
        if col.size == 0:
            continue
        mag = np.abs(series.values[:, col[0]])
        peak = mag.max()
        if not peak > 0 or (mag.size > 1 and np.argmax(mag) == mag.size - 1):
            continue
        out[int(d)] = float(series.times[np.argmax(mag >= kappa * peak)])
    return out


def light_cone_velocity(
    series: CorrelationSeries,
    method: str = "arrival",
    kappa: float = 0.5,
    d_min: int = 4,
    edge: int = 3,
    noise_floor: float | None = None,
) -> FitResult:
    """Ballistic spreading velocity of correlations.

    The correlation front sits at ``d = 2 v t``; the returned ``velocity`` is
    ``v`` and ``slope`` is the raw ``d``-versus-``t`` slope.

    ``method="arrival"`` fits distance against the arrival time at which
    ``|C_d|`` first reaches ``kappa`` times its maximum. ``method="threshold"``
    takes, at each time, the largest distance with ``|C_d|`` above ten times
    ``noise_floor`` and fits it against time.

    Distances below ``d_min`` (the short-distance regime) and within ``edge``
    of ``N / 2`` (wrap-around on a ring) are ignored.
    """
    d_top = int(series.distances.max()) - edge
    candidates = [int(d) for d in series.distances if d_min <= d <= d_top]
    if series.times.size < 3 or len(candidates) < 3:
        raise InsufficientGridError("need at least 3 times and 3 distances inside the fit range")
    flags: tuple[str, ...] = ()
    if method == "arrival":
        arrivals = arrival_times(series, candidates, kappa)
        if len(arrivals) < 3:
            raise InsufficientGridError(f"front reached only {len(arrivals)} distances within the time grid")
        t_pts = np.array(list(arrivals.values()))
        d_pts = np.array(list(arrivals.keys()), dtype=float)
    elif method == "threshold":
        floor = noise_floor
        if floor is None:
            positive = series.stderr[series.stderr > 0]
            floor = float(np.median(positive)) if positive.size else EXACT_FLOOR
        cols = np.isin(series.distances, candidates)
        dist = series.distances[cols]
        above = np.abs(series.values[:, cols]) > 10.0 * floor
        t_list, d_list = [], []
        for k, t in enumerate(series.times):
            if above[k].any():
                front = int(dist[np.flatnonzero(above[k]).max()])
                if front < dist.max():
                    t_list.append(t)
                    d_list.append(front)
        if len(t_list) < 3:
            raise InsufficientGridError("front inside the fit range at fewer than 3 times")
        t_pts, d_pts = np.array(t_list), np.array(d_list, dtype=float)
    else:
        raise ValueError("method must be 'arrival' or 'threshold'")

    if np.ptp(t_pts) == 0 or np.ptp(d_pts) == 0:
        flags = ("no-time-dependence",)
        return FitResult(
            {"velocity": 0.0, "slope": 0.0, "intercept": float(np.mean(d_pts))},
            {"velocity": math.inf, "slope": math.inf, "intercept": math.inf},
            (float(t_pts.min()), float(t_pts.max())),
            0.0,
            flags,
        )
    params, cov, resid = _linear_fit(t_pts, d_pts)
    slope, s_slope = float(params[1]), math.sqrt(max(cov[1, 1], 0.0))
    return FitResult(
        {"velocity": slope / 2.0, "slope": slope, "intercept": float(params[0])},
        {"velocity": s_slope / 2.0, "slope": s_slope, "intercept": math.sqrt(max(cov[0, 0], 0.0))},
        (float(t_pts.min()), float(t_pts.max())),
        resid,
        flags,
    )
