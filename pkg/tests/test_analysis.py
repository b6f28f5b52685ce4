import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dtwa_ising import analysis
from dtwa_ising.analysis import (
    FitResult,
    GridMismatchError,
    NoOscillationError,
    NonPositiveInputError,
    DegenerateWindowError,
    SignChangeError,
    fit_power_law,
    fit_xi1,
    fit_xi2_envelope,
    light_cone_velocity,
    plateau_value,
    residuals,
)
from dtwa_ising.fermion import FreeFermionQuench
from dtwa_ising.model import CorrelationSeries, QuenchSpec, time_grid


def series_at(values, stderr=None, t=0.0):
    values = np.asarray(values, dtype=float)
    return CorrelationSeries([t], np.arange(values.size), values[None], None if stderr is None else np.asarray(stderr)[None])


@given(xi=st.floats(0.1, 20.0), amp=st.floats(0.05, 1.0), sign=st.sampled_from([-1.0, 1.0]))
def test_xi1_recovers_exponential(xi, amp, sign):
    d = np.arange(8)
    vals = sign * amp * np.exp(-d / xi)
    vals[0] = 1.0
    fit = fit_xi1(series_at(vals), 0.0)
    assert fit["xi1"] == pytest.approx(xi, rel=1e-9)
    assert fit.window == (1, 2)


def test_xi1_weighted_uncertainty():
    vals = np.array([1.0, 0.5, 0.25])
    fit = fit_xi1(series_at(vals, [0.0, 0.01, 0.01]), 0.0)
    assert fit["xi1"] == pytest.approx(1 / math.log(2))
    # two points: sigma_slope = sqrt((0.01/0.5)^2 + (0.01/0.25)^2)
    sigma = math.hypot(0.02, 0.04)
    assert fit.error("xi1") == pytest.approx(sigma * fit["xi1"] ** 2, rel=1e-9)


def test_xi1_failures():
    with pytest.raises(SignChangeError):
        fit_xi1(series_at([1.0, 0.3, -0.1]), 0.0)
    with pytest.raises(analysis.FitError):
        fit_xi1(series_at([1.0, 0.3, 0.0]), 0.0)
    with pytest.raises(analysis.NonDecayingError):
        fit_xi1(series_at([1.0, 0.3, 0.4]), 0.0)
    with pytest.raises(analysis.FitError):
        fit_xi1(series_at([1.0, 0.3, 0.1]), 0.0, window=(1,))


@pytest.mark.parametrize("xi2", [3.0, 5.0, 10.0])
@pytest.mark.parametrize("phase", [0.0, 0.3])
def test_xi2_recovers_envelope(xi2, phase):
    d = np.arange(41)
    # |cos| has period 4 in d here, so every maximum sits at the same phase
    vals = np.exp(-d / xi2) * np.cos(np.pi * d / 4 + phase)
    vals[0] = 1.0
    fit = fit_xi2_envelope(series_at(vals), 0.0)
    assert fit["xi2"] == pytest.approx(xi2, rel=1e-9)


def test_xi2_needs_oscillation():
    d = np.arange(30)
    with pytest.raises(NoOscillationError):
        fit_xi2_envelope(series_at(np.exp(-d / 3.0)), 0.0)
    noisy = np.r_[1.0, 0.4, 0.1, 0.01 * np.cos(np.pi * d[3:])]
    with pytest.raises(NoOscillationError):
        fit_xi2_envelope(series_at(noisy, np.full(30, 0.02)), 0.0)


def test_exact_oscillatory_regime_has_finite_xi2():
    spec = QuenchSpec(40, 1000.0, 5.0, (2.0,))
    fit = fit_xi2_envelope(FreeFermionQuench(spec).series(), 2.0)
    assert 0 < fit["xi2"] < 20


def test_residuals():
    ref = series_at([1.0, 0.5, 0.0])
    test = series_at([1.0, 0.6, 0.1])
    res = residuals(test, ref)
    assert np.allclose(res.delta, [[0.0, 0.1, 0.1]])
    assert res.relative[0, 1] == pytest.approx(0.2)
    assert np.isnan(res.relative[0, 2]) and res.undefined[0, 2]
    with pytest.raises(GridMismatchError):
        residuals(series_at([1.0, 0.5]), ref)
    with pytest.raises(GridMismatchError):
        residuals(series_at([1.0, 0.5, 0.0], t=1.0), ref)


def test_plateau_and_power_law():
    vals = np.r_[1.0, np.zeros(19), [0.01, -0.02, 0.03, -0.01, 0.02]]
    mean, std = plateau_value(series_at(vals), 0.0)
    assert mean == pytest.approx(0.018) and std == pytest.approx(np.std([0.01, 0.02, 0.03, 0.01, 0.02]))
    r = np.array([1e2, 1e3, 1e4, 1e5])
    fit = fit_power_law(r, 0.3 * r ** -0.5)
    assert fit["a"] == pytest.approx(0.3) and fit["b"] == pytest.approx(-0.5)
    assert fit.error("b") == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DegenerateWindowError):
        fit_power_law(r[:2], [0.1, 0.01])
    with pytest.raises(NonPositiveInputError):
        fit_power_law(r, [0.1, 0.0, 0.01, 0.001])
    with pytest.raises(analysis.RangeError):
        plateau_value(series_at(vals[:10]), 0.0)


def synthetic_front(speed, times, n_d=51):
    d = np.arange(n_d)
    vals = np.exp(-((d[None, :] - 2 * speed * times[:, None]) ** 2) / 4.0)
    vals[:, 0] = 1.0
    return CorrelationSeries(times, d, vals)


@pytest.mark.parametrize("speed", [1.0, 2.0, 3.0])
def test_light_cone_arrival_recovers_speed(speed):
    times = time_grid(0.0, 40.0 / (2 * speed), 0.05)
    fit = light_cone_velocity(synthetic_front(speed, np.array(times)))
    assert fit["velocity"] == pytest.approx(speed, rel=0.03)
    assert fit["slope"] == pytest.approx(2 * fit["velocity"])


def test_light_cone_time_independent_series():
    times = np.linspace(0, 5, 11)
    d = np.arange(31)
    vals = np.tile(np.exp(-d / 2.0), (times.size, 1))
    fit = light_cone_velocity(CorrelationSeries(times, d, vals), method="threshold", noise_floor=1e-6)
    assert fit["velocity"] == 0.0 and math.isinf(fit.error("velocity"))
    assert "no-time-dependence" in fit.flags


def test_light_cone_exact_series_and_grid_checks():
    spec = QuenchSpec(100, 1000.0, 1.1, time_grid(0.0, 12.5, 0.25))
    series = FreeFermionQuench(spec).series()
    fit = light_cone_velocity(series)
    assert abs(fit["velocity"] - 2.0) <= 0.2
    with pytest.raises(analysis.InsufficientGridError):
        light_cone_velocity(CorrelationSeries(series.times[:2], series.distances, series.values[:2]))
    with pytest.raises(ValueError):
        light_cone_velocity(series, method="guess")


def test_fit_result_validation():
    with pytest.raises(ValueError):
        FitResult({"a": 1.0}, {"a": 0.1}, (), 0.0)
    with pytest.raises(ValueError):
        FitResult({"a": 1.0}, {"a": -0.1}, (1,), 0.0)
