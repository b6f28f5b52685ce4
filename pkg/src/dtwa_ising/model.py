"""Quench problem definition and shared result types.

All energies and fields are in units of the Ising coupling ``J``; times in
units of ``1/J``. The critical field is ``h_c = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

H_CRITICAL = 1.0


class SpecError(ValueError):
    """A quench setup violates one of its invariants."""

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


class DomainError(ValueError):
    """Inputs lie outside the domain where a formula or method is defined."""


@dataclass(frozen=True)
class QuenchSpec:
    """Sudden quench ``h_i -> h_f`` of a periodic transverse-field Ising chain.

    The system starts in the ground state at ``h_i`` and evolves with the
    Hamiltonian at ``h_f``. ``t_grid`` lists the output times.
    """

    n: int
    h_i: float
    h_f: float
    t_grid: tuple[float, ...] = (0.0,)
    j: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))

    @property
    def epsilon(self) -> float:
        return epsilon(self.h_f)

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self.t_grid, dtype=float)

    @property
    def max_distance(self) -> int:
        return self.n // 2

    def with_times(self, t_grid: Sequence[float]) -> "QuenchSpec":
        return QuenchSpec(self.n, self.h_i, self.h_f, tuple(t_grid), self.j)

    def with_fields(self, h_i: float | None = None, h_f: float | None = None) -> "QuenchSpec":
        return QuenchSpec(
            self.n,
            self.h_i if h_i is None else h_i,
            self.h_f if h_f is None else h_f,
            self.t_grid,
            self.j,
        )

    def canonical(self) -> str:
        """Stable text form, used for hashing and file headers."""
        times = ",".join(repr(t) for t in self.t_grid)
        return f"n={self.n};j={self.j!r};h_i={self.h_i!r};h_f={self.h_f!r};t_list={times}"


def epsilon(h_f: float) -> float:
    """Distance ``h_f - 1`` from the critical point."""
    eps = h_f - H_CRITICAL
    if not eps > -1.0:
        raise DomainError(f"epsilon must exceed -1, got {eps}")
    return eps


def validate_spec(spec: QuenchSpec) -> QuenchSpec:
    """Return ``spec`` unchanged, or raise :class:`SpecError` naming the first broken invariant."""
    if not isinstance(spec.n, (int, np.integer)) or isinstance(spec.n, bool):
        raise SpecError("n", "N must be an integer")
    if spec.n < 2:
        raise SpecError("n", "N must be at least 2")
    if spec.n % 2:
        raise SpecError("n", "N must be even")
    for name in ("j", "h_i", "h_f"):
        if not math.isfinite(getattr(spec, name)):
            raise SpecError(name, f"{name} must be finite")
    if spec.j <= 0:
        raise SpecError("j", "J must be positive")
    if spec.h_i <= 0:
        raise SpecError("h_i", "h_i must be positive")
    if spec.h_f < 0:
        raise SpecError("h_f", "h_f must be non-negative")
    t = spec.t_grid
    if len(t) == 0:
        raise SpecError("t_grid", "time grid is empty")
    if not all(math.isfinite(x) for x in t):
        raise SpecError("t_grid", "times must be finite")
    if t[0] < 0:
        raise SpecError("t_grid", "times must be non-negative")
    if any(b <= a for a, b in zip(t, t[1:])):
        raise SpecError("t_grid", "time grid must be strictly increasing")
    return spec


# --- spec files -------------------------------------------------------------
#
# One ``key = value`` pair per line; blank lines and lines starting with ``#``
# are ignored, except that a ``#:`` prefix marks an embedded config line (the
# form used in output-file headers, so outputs can be fed back as configs).

SPEC_KEYS = ("n", "j", "h_i", "h_f", "t_start", "t_end", "t_step", "t_list")


def parse_key_values(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("#:"):
            line = line[2:].strip()
        elif not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip().lower().replace("-", "_")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


def time_grid(t_start: float, t_end: float, t_step: float) -> tuple[float, ...]:
    """Inclusive uniform grid; points are ``t_start + k * t_step``."""
    if t_step <= 0:
        raise SpecError("t_grid", "t_step must be positive")
    count = int(math.floor((t_end - t_start) / t_step + 1e-9)) + 1
    if count < 1:
        raise SpecError("t_grid", "t_end is before t_start")
    return tuple(round(t_start + k * t_step, 12) for k in range(count))


def spec_from_mapping(values: dict[str, str]) -> QuenchSpec:
    try:
        n = int(values["n"])
        h_i = float(values["h_i"])
        h_f = float(values["h_f"])
    except KeyError as exc:
        raise SpecError(exc.args[0], "missing required key") from None
    j = float(values.get("j", 1.0))
    if "t_list" in values:
        if any(k in values for k in ("t_start", "t_end", "t_step")):
            raise SpecError("t_grid", "give either t_list or t_start/t_end/t_step")
        t_grid = tuple(float(x) for x in values["t_list"].replace(" ", "").split(",") if x)
    elif "t_end" in values:
        t_grid = time_grid(
            float(values.get("t_start", 0.0)),
            float(values["t_end"]),
            float(values.get("t_step", 1.0)),
        )
    else:
        t_grid = (float(values.get("t_start", 0.0)),)
    return validate_spec(QuenchSpec(n=n, h_i=h_i, h_f=h_f, t_grid=t_grid, j=j))


def spec_to_text(spec: QuenchSpec) -> str:
    times = ", ".join(repr(t) for t in spec.t_grid)
    return f"n = {spec.n}\nj = {spec.j!r}\nh_i = {spec.h_i!r}\nh_f = {spec.h_f!r}\nt_list = {times}\n"


def load_spec(path: str | Path) -> QuenchSpec:
    values = parse_key_values(Path(path).read_text())
    return spec_from_mapping({k: v for k, v in values.items() if k in SPEC_KEYS})


def save_spec(spec: QuenchSpec, path: str | Path) -> None:
    Path(path).write_text(spec_to_text(spec))


@dataclass
class CorrelationSeries:
    """``C^xx_d(t)`` on a ``(time, distance)`` grid.

    ``values`` and ``stderr`` have shape ``(len(times), len(distances))``.
    Exact methods leave ``stderr`` at zero.
    """

    times: np.ndarray
    distances: np.ndarray
    values: np.ndarray
    stderr: np.ndarray = field(default=None)  # type: ignore[assignment]
    method: str = "exact"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.distances = np.asarray(self.distances, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        if self.stderr is None:
            self.stderr = np.zeros_like(self.values)
        self.stderr = np.asarray(self.stderr, dtype=float)
        shape = (self.times.size, self.distances.size)
        if self.values.shape != shape or self.stderr.shape != shape:
            raise ValueError(f"values/stderr must have shape {shape}")

    def time_index(self, t: float) -> int:
        hits = np.flatnonzero(np.isclose(self.times, t, rtol=0, atol=1e-9))
        if hits.size == 0:
            raise KeyError(f"time {t} not in series")
        return int(hits[0])

    def at(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Distances, values and errors at time ``t``."""
        i = self.time_index(t)
        return self.distances, self.values[i], self.stderr[i]

    def check_invariants(self) -> None:
        zero = np.flatnonzero(self.distances == 0)
        if zero.size and not np.all(self.values[:, zero[0]] == 1.0):
            raise ValueError("C_0 must equal 1")
        if np.any(np.abs(self.values) > 1 + 3 * self.stderr + 1e-12):
            raise ValueError("|C| exceeds 1 beyond statistical noise")
