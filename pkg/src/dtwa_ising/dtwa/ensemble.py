"""Ensemble averages over sampled trajectories.

Trajectories are cut into fixed chunks of ``CHUNK_SIZE`` consecutive
indices. Chunks may run on any number of worker threads, but their
moments are merged strictly in chunk order, so the worker count never
changes a single bit of the result.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..model import CorrelationSeries, QuenchSpec, validate_spec
from . import eom
from .checkpoint import Moments, load_checkpoint, run_digest, save_checkpoint
from .integrate import DEFAULT_TOL, integrate_batch
from .phase_space import SCHEMES, InitialSampler
from .rng import check_seed, trajectory_rng

CHUNK_SIZE = 250
MAX_UNSTABLE_FRACTION = 0.5


class EnsembleInstabilityError(ArithmeticError):
    """More than half of the trajectories went unstable at some output time.

    The partial result is attached as ``result``.
    """

    def __init__(self, message: str, result: "EnsembleResult"):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class EnsembleOptions:
    order: int = 1
    scheme: str = "s8"
    samples: int = 10_000
    seed: int = 0
    tol: float = DEFAULT_TOL
    integrator: str = "dp5"

    def __post_init__(self):
        object.__setattr__(self, "scheme", self.scheme.lower())
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.samples < 2:
            raise ValueError("need at least 2 samples")
        if self.integrator not in ("dp5", "rk4"):
            raise ValueError("integrator must be dp5 or rk4")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        check_seed(self.seed)

    def identity(self, spec: QuenchSpec) -> str:
        """Everything that determines the result except the seed."""
        return (
            f"{spec.canonical()};order={self.order};scheme={self.scheme};samples={self.samples};"
            f"tol={self.tol!r};integrator={self.integrator};chunk={CHUNK_SIZE}"
        )


@dataclass
class EnsembleResult:
    series: CorrelationSeries
    magnetization: np.ndarray  # (T, N) site-resolved <sigma^z>
    magnetization_stderr: np.ndarray
    samples: int
    seed: int
    scheme: str
    order: int
    valid_counts: np.ndarray = field(default=None)  # type: ignore[assignment]

    @property
    def unstable_fraction(self) -> np.ndarray:
        return 1.0 - self.valid_counts / self.samples


def correlation_features(n: int, order: int):
    """Map packed states ``(b, D)`` to ``C_0..C_{N/2}`` followed by the ``N`` values of ``s^z``."""
    dmax = n // 2
    sites = np.arange(n)

    def observe(y):
        s, c = eom.unpack(y, n, order)
        out = np.empty((y.shape[0], dmax + 1 + n))
        out[:, 0] = 1.0
        if order == 1:
            x = s[:, eom.X, :]
            for d in range(1, dmax + 1):
                fwd = x * np.roll(x, -d, axis=-1)
                bwd = x * np.roll(x, d, axis=-1)
                out[:, d] = np.mean(0.5 * (fwd + bwd), axis=-1)
        else:
            full = eom.second_order_correlations(s, c)
            for d in range(1, dmax + 1):
                fwd = full[:, sites, (sites + d) % n]
                bwd = full[:, sites, (sites - d) % n]
                out[:, d] = np.mean(0.5 * (fwd + bwd), axis=-1)
        out[:, dmax + 1 :] = s[:, eom.Z, :]
        return out

    return observe


def initial_states(n: int, order: int, scheme: str, seed: int, start: int, stop: int) -> np.ndarray:
    sampler = InitialSampler(scheme)
    spins = np.stack([sampler.draw(n, trajectory_rng(seed, r)) for r in range(start, stop)])
    if order == 1:
        return eom.pack(spins)
    return eom.pack(spins, np.zeros(spins.shape[:1] + (3, 3, n, n)))


def _spin_norm_violation(n: int):
    def violation(y):
        s = y.reshape(y.shape[0], 3, n)
        return np.max(np.abs(np.sum(s * s, axis=1) - 3.0), axis=1)

    return violation


def run_chunk(spec: QuenchSpec, opts: EnsembleOptions, start: int, stop: int) -> Moments:
    n = spec.n
    y0 = initial_states(n, opts.order, opts.scheme, opts.seed, start, stop)
    res = integrate_batch(
        eom.flat_rhs(n, opts.order, spec.h_f, spec.j),
        y0,
        spec.times,
        tol=opts.tol,
        method=opts.integrator,
        constraint=_spin_norm_violation(n) if opts.order == 1 else None,
        observe=correlation_features(n, opts.order),
    )
    return Moments.from_samples(res.states, res.valid_mask())


def run_ensemble(
    spec: QuenchSpec,
    samples: int = 10_000,
    order: int = 1,
    scheme: str = "s8",
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    integrator: str = "dp5",
    workers: int = 1,
    checkpoint: str | Path | None = None,
    check_stability: bool = True,
) -> EnsembleResult:
    """Sample ``samples`` trajectories and average ``C^xx_d(t)`` and ``<sigma^z_i>(t)``.

    With ``checkpoint`` set, moments are written after every chunk and an
    existing file for the same run is resumed.
    """
    spec = validate_spec(spec)
    opts = EnsembleOptions(order, scheme, samples, seed, tol, integrator)
    n, dmax = spec.n, spec.n // 2
    digest = run_digest(opts.identity(spec))
    moments = Moments.empty(len(spec.t_grid), dmax + 1 + n)
    done = 0
    if checkpoint is not None and Path(checkpoint).exists():
        done, moments = load_checkpoint(checkpoint, digest, opts.seed)
    bounds = [(a, min(a + CHUNK_SIZE, samples)) for a in range(done, samples, CHUNK_SIZE)]

    def work(bound):
        return run_chunk(spec, opts, *bound)

    with ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
        for (_, stop), part in zip(bounds, pool.map(work, bounds)):
            moments = moments.merge(part)
            if checkpoint is not None:
                save_checkpoint(checkpoint, digest, opts.seed, stop, moments)

    err = moments.stderr()
    corr, corr_err = moments.mean[:, : dmax + 1].copy(), err[:, : dmax + 1].copy()
    corr[:, 0], corr_err[:, 0] = 1.0, 0.0
    series = CorrelationSeries(
        spec.times, np.arange(dmax + 1), corr, corr_err, method=f"dtwa{opts.order}-{opts.scheme}"
    )
    result = EnsembleResult(
        series,
        moments.mean[:, dmax + 1 :].copy(),
        err[:, dmax + 1 :].copy(),
        samples,
        opts.seed,
        opts.scheme,
        opts.order,
        moments.count.copy(),
    )
    frac = result.unstable_fraction
    if check_stability and np.any(frac > MAX_UNSTABLE_FRACTION):
        first = spec.times[np.argmax(frac > MAX_UNSTABLE_FRACTION)]
        raise EnsembleInstabilityError(
            f"{frac.max():.0%} of trajectories unstable (first exceeds "
            f"{MAX_UNSTABLE_FRACTION:.0%} at t = {first})",
            result,
        )
    return result


def chunk_count(samples: int) -> int:
    return math.ceil(samples / CHUNK_SIZE)
