"""Experiment configuration shared by the command-line tools.

Config files use the same ``key = value`` format as quench files. Every
output file repeats the resolved configuration as ``#:`` lines in its
header, so an output can be passed back as ``--config`` to regenerate it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .ed import MAX_SITES
from .model import SPEC_KEYS, QuenchSpec, SpecError, parse_key_values, spec_from_mapping, validate_spec

METHODS = ("exact", "approx", "ed", "dtwa")
ANALYSES = ("xi1", "xi2", "residuals", "plateau", "power-law", "light-cone")
SCANS = ("epsilon", "h_f", "time", "samples")
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExperimentConfig:
    spec: QuenchSpec
    method: str = "exact"
    order: int = 1
    scheme: str = "s8"
    samples: int = 10_000
    seed: int = 0
    tol: float = 1e-8
    integrator: str = "dp5"
    distances: tuple[int, ...] | None = None
    analyses: tuple[str, ...] = ()
    reference: str = "exact"
    scan: str | None = None
    scan_values: tuple[float, ...] = ()
    plateau_range: tuple[int, int] = (20, 24)
    reference_n: int | None = None
    reference_t: float | None = None
    threads: int = 1
    output: str | None = field(default=None, compare=False)

    def validated(self) -> "ExperimentConfig":
        validate_spec(self.spec)
        if self.method not in METHODS:
            raise SpecError("method", f"method must be one of {METHODS}")
        if self.reference not in METHODS:
            raise SpecError("reference", f"reference must be one of {METHODS}")
        if self.method == "ed" and self.spec.n > MAX_SITES:
            raise SpecError("method", f"ed requires N <= {MAX_SITES}, got N={self.spec.n}")
        if self.method == "approx" and not self.spec.h_i > self.spec.h_f > 1:
            raise SpecError("method", "approx requires h_i > h_f > 1")
        if self.order not in (1, 2):
            raise SpecError("order", "order must be 1 or 2")
        if self.scheme not in ("s4", "s8"):
            raise SpecError("scheme", "scheme must be s4 or s8")
        if self.samples < 2:
            raise SpecError("samples", "need at least 2 samples")
        for a in self.analyses:
            if a not in ANALYSES:
                raise SpecError("analyses", f"unknown analysis {a!r}; choose from {ANALYSES}")
        if self.scan is not None and self.scan not in SCANS:
            raise SpecError("scan", f"scan must be one of {SCANS}")
        if self.distances is not None and any(not 0 <= d <= self.spec.n // 2 for d in self.distances):
            raise SpecError("distances", f"distances must lie in 0..{self.spec.n // 2}")
        return self

    def with_overrides(self, **changes) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)

    def header_lines(self) -> list[str]:
        """Resolved configuration as ``key = value`` lines (everything but the output path)."""
        s = self.spec
        lines = [
            f"n = {s.n}",
            f"j = {s.j!r}",
            f"h_i = {s.h_i!r}",
            f"h_f = {s.h_f!r}",
            "t_list = " + ", ".join(repr(t) for t in s.t_grid),
            f"method = {self.method}",
            f"order = {self.order}",
            f"scheme = {self.scheme}",
            f"samples = {self.samples}",
            f"seed = {self.seed}",
            f"tol = {self.tol!r}",
            f"integrator = {self.integrator}",
            f"reference = {self.reference}",
            f"plateau_range = {self.plateau_range[0]}, {self.plateau_range[1]}",
            f"threads = {self.threads}",
        ]
        if self.distances is not None:
            lines.append("distances = " + ", ".join(str(d) for d in self.distances))
        if self.analyses:
            lines.append("analyses = " + ", ".join(self.analyses))
        if self.scan is not None:
            lines.append(f"scan = {self.scan}")
            lines.append("scan_values = " + ", ".join(repr(v) for v in self.scan_values))
        if self.reference_n is not None:
            lines.append(f"reference_n = {self.reference_n}")
        if self.reference_t is not None:
            lines.append(f"reference_t = {self.reference_t!r}")
        return lines


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def config_from_mapping(values: dict[str, str]) -> ExperimentConfig:
    known = set(SPEC_KEYS) | {
        "method", "order", "scheme", "samples", "seed", "tol", "integrator", "distances",
        "analyses", "reference", "scan", "scan_values", "plateau_range", "reference_n",
        "reference_t", "threads", "output",
    }
    unknown = sorted(set(values) - known)
    if unknown:
        raise SpecError("config", f"unknown keys {unknown}")
    spec = spec_from_mapping({k: v for k, v in values.items() if k in SPEC_KEYS})
    kw: dict = {}
    for key, conv in (("method", str), ("scheme", str.lower), ("integrator", str), ("reference", str),
                      ("order", int), ("samples", int), ("seed", int), ("threads", int),
                      ("tol", float), ("reference_n", int), ("reference_t", float), ("output", str)):
        if key in values:
            kw[key] = conv(values[key])
    if "scan" in values:
        kw["scan"] = values["scan"]
    if "distances" in values:
        kw["distances"] = tuple(int(v) for v in _split(values["distances"]))
    if "analyses" in values:
        kw["analyses"] = tuple(_split(values["analyses"]))
    if "scan_values" in values:
        kw["scan_values"] = tuple(float(v) for v in _split(values["scan_values"]))
    if "plateau_range" in values:
        lo, hi = (int(v) for v in _split(values["plateau_range"]))
        kw["plateau_range"] = (lo, hi)
    return ExperimentConfig(spec=spec, **kw)


def load_mapping(path: str | Path) -> dict[str, str]:
    """Raw ``key = value`` pairs of a config file or of an output file's header.

    CSV outputs carry the config as ``#:`` lines; JSON outputs carry it under
    ``"config"``.
    """
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return {k: str(v) for k, v in json.loads(text)["config"].items()}
    embedded = [line for line in text.splitlines() if line.lstrip().startswith("#:")]
    return parse_key_values("\n".join(embedded) if embedded else text)


def load_config(path: str | Path) -> ExperimentConfig:
    return config_from_mapping(load_mapping(path))
