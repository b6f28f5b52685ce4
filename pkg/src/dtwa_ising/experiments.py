"""Run configured experiments: correlation series and scan summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import analysis
from .config import ExperimentConfig
from .dtwa.ensemble import EnsembleInstabilityError, run_ensemble
from .ed import QuenchED
from .fermion import FreeFermionQuench, approx_correlator, xi_gge
from .model import CorrelationSeries, DomainError, QuenchSpec


@dataclass
class SeriesRun:
    series: CorrelationSeries
    notes: dict[str, str] = field(default_factory=dict)


def _distances(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.distances is not None:
        return np.asarray(cfg.distances, dtype=int)
    return np.arange(cfg.spec.n // 2 + 1)


def compute_series(
    cfg: ExperimentConfig, method: str | None = None, spec: QuenchSpec | None = None, checkpoint=None
) -> SeriesRun:
    """``C^xx_d(t)`` for ``cfg`` with the requested (or configured) method.

    ``checkpoint`` is passed to the dTWA ensemble so an interrupted run resumes.
    """
    method = method or cfg.method
    spec = spec or cfg.spec
    dist = _distances(cfg) if spec.n == cfg.spec.n else np.arange(spec.n // 2 + 1)
    if method == "exact":
        return SeriesRun(FreeFermionQuench(spec).series(distances=dist))
    if method == "ed":
        ed = QuenchED(spec)
        vals = np.array([ed.correlations(t, dist) for t in spec.times])
        return SeriesRun(CorrelationSeries(spec.times, dist, vals, method="ed"))
    if method == "approx":
        vals = np.array(
            [[1.0 if d == 0 else approx_correlator(spec, t, int(d)) for d in dist] for t in spec.times]
        )
        return SeriesRun(CorrelationSeries(spec.times, dist, vals, method="approx"))
    if method == "dtwa":
        notes = {}
        try:
            res = run_ensemble(
                spec, cfg.samples, cfg.order, cfg.scheme, cfg.seed, cfg.tol, cfg.integrator, cfg.threads,
                checkpoint,
            )
        except EnsembleInstabilityError as exc:
            raise DomainError(str(exc)) from exc
        full = res.series
        cols = np.searchsorted(full.distances, dist)
        series = CorrelationSeries(full.times, dist, full.values[:, cols], full.stderr[:, cols], full.method)
        notes["unstable_fraction"] = ", ".join(f"{v:.4g}" for v in res.unstable_fraction)
        notes["mean_magnetization"] = ", ".join(f"{v:.6g}" for v in res.magnetization.mean(axis=1))
        return SeriesRun(series, notes)
    raise DomainError(f"unknown method {method!r}")


SUMMARY_COLUMNS = (
    "scan", "value", "h_f", "t", "samples", "xi1", "xi1_err", "xi2", "xi2_err",
    "plateau", "plateau_std", "max_abs_residual", "velocity", "velocity_err",
    "xi_gge", "reference_xi1", "error",
)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else str(x)
    return str(x)


def summarize(cfg: ExperimentConfig, series: CorrelationSeries, t: float, spec: QuenchSpec) -> dict:
    """Requested analyses at time ``t``; failures are reported, not raised."""
    row: dict = {"h_f": spec.h_f, "t": t}
    errors = []

    def attempt(name, func):
        try:
            func()
        except (DomainError, ValueError, ArithmeticError) as exc:
            errors.append(f"{name}: {exc}")

    if "xi1" in cfg.analyses:
        def xi1():
            fit = analysis.fit_xi1(series, t)
            row["xi1"], row["xi1_err"] = float(fit["xi1"]), float(fit.error("xi1"))
        attempt("xi1", xi1)
    if "xi2" in cfg.analyses:
        def xi2():
            fit = analysis.fit_xi2_envelope(series, t)
            row["xi2"], row["xi2_err"] = float(fit["xi2"]), float(fit.error("xi2"))
        attempt("xi2", xi2)
    if "plateau" in cfg.analyses or "power-law" in cfg.analyses:
        def plateau():
            lo, hi = cfg.plateau_range
            row["plateau"], row["plateau_std"] = analysis.plateau_value(series, t, range(lo, hi + 1))
        attempt("plateau", plateau)
    if "residuals" in cfg.analyses:
        def resid():
            ref = compute_series(cfg, cfg.reference, spec.with_times((t,))).series
            i = series.time_index(t)
            test = CorrelationSeries([t], series.distances, series.values[i : i + 1], series.stderr[i : i + 1])
            row["max_abs_residual"] = float(np.max(np.abs(analysis.residuals(test, ref).delta)))
        attempt("residuals", resid)
    if "light-cone" in cfg.analyses:
        def cone():
            fit = analysis.light_cone_velocity(series)
            row["velocity"], row["velocity_err"] = float(fit["velocity"]), float(fit.error("velocity"))
        attempt("light-cone", cone)
    if cfg.reference_t is not None:
        def gge():
            row["xi_gge"] = xi_gge(spec.h_f - 1.0)
            n_ref = cfg.reference_n or spec.n
            ref_spec = QuenchSpec(n_ref, spec.h_i, spec.h_f, (cfg.reference_t,), spec.j)
            ref = FreeFermionQuench(ref_spec).series(distances=[0, 1, 2])
            row["reference_xi1"] = float(analysis.fit_xi1(ref, cfg.reference_t)["xi1"])
        attempt("reference", gge)
    row["error"] = "; ".join(errors)
    return row


def run_scan(cfg: ExperimentConfig) -> tuple[list[dict], list[str]]:
    """One summary row per scan point, plus trailing notes (e.g. power-law fit)."""
    if cfg.scan is None or not cfg.scan_values:
        raise DomainError("scan needs 'scan' and a non-empty 'scan_values'")
    rows, notes = [], []
    t_last = cfg.spec.t_grid[-1]
    if cfg.scan == "time":
        spec = cfg.spec.with_times(sorted(cfg.scan_values))
        try:
            series = compute_series(cfg, spec=spec).series
        except (DomainError, ValueError, ArithmeticError) as exc:
            return [{"scan": "time", "value": t, "error": str(exc)} for t in spec.t_grid], notes
        for t in spec.t_grid:
            rows.append({"scan": "time", "value": t, "samples": cfg.samples, **summarize(cfg, series, t, spec)})
        return rows, notes
    for value in cfg.scan_values:
        point_cfg, spec = cfg, cfg.spec
        if cfg.scan == "epsilon":
            spec = spec.with_fields(h_f=1.0 + value)
        elif cfg.scan == "h_f":
            spec = spec.with_fields(h_f=value)
        elif cfg.scan == "samples":
            point_cfg = replace(cfg, samples=int(value))
        row = {"scan": cfg.scan, "value": value, "samples": point_cfg.samples, "h_f": spec.h_f, "t": t_last}
        try:
            series = compute_series(point_cfg, spec=spec).series
            row.update(summarize(point_cfg, series, t_last, spec))
        except (DomainError, ValueError, ArithmeticError) as exc:
            row["error"] = str(exc)
        rows.append(row)
    if "power-law" in cfg.analyses and cfg.scan == "samples":
        pts = [(r["samples"], r["plateau"]) for r in rows if r.get("plateau")]
        try:
            fit = analysis.fit_power_law([p[0] for p in pts], [p[1] for p in pts])
            notes.append(
                f"power_law a = {fit['a']!r} +- {fit.error('a')!r}; b = {fit['b']!r} +- {fit.error('b')!r}"
            )
        except DomainError as exc:
            notes.append(f"power_law error: {exc}")
    return rows, notes


def format_row(row: dict) -> list[str]:
    return [_fmt(row.get(c)) for c in SUMMARY_COLUMNS]
