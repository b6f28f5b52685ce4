import numpy as np
import pytest

from dtwa_ising.dtwa import ensemble
from dtwa_ising.dtwa.checkpoint import CheckpointError
from dtwa_ising.dtwa.ensemble import (
    CHUNK_SIZE,
    EnsembleInstabilityError,
    EnsembleOptions,
    chunk_count,
    correlation_features,
    initial_states,
    run_ensemble,
)
from dtwa_ising.dtwa import eom
from dtwa_ising.model import QuenchSpec

SPEC = QuenchSpec(8, 1000.0, 1.0001, (0.0, 0.25, 0.5))


def assert_same(a, b):
    assert np.array_equal(a.series.values, b.series.values)
    assert np.array_equal(a.series.stderr, b.series.stderr)
    assert np.array_equal(a.magnetization, b.magnetization)


def test_initial_state_statistics():
    res = run_ensemble(QuenchSpec(10, 1000.0, 1.0001, (0.0,)), 2000, seed=4)
    assert res.series.values[0, 0] == 1.0 and res.series.stderr[0, 0] == 0.0
    assert np.all(res.magnetization == 1.0)
    assert np.all(np.abs(res.series.values[0, 1:]) < 4 * res.series.stderr[0, 1:] + 1e-12)
    assert np.all(res.valid_counts == 2000)


def test_reproducible_across_worker_counts():
    a = run_ensemble(SPEC, 2 * CHUNK_SIZE + 30, seed=9, workers=1)
    b = run_ensemble(SPEC, 2 * CHUNK_SIZE + 30, seed=9, workers=3)
    assert_same(a, b)
    c = run_ensemble(SPEC, 2 * CHUNK_SIZE + 30, seed=10)
    assert not np.array_equal(a.series.values[1:], c.series.values[1:])


def test_prefix_of_samples_is_reused():
    # trajectory r depends on (seed, r) only, so growing R adds trajectories
    few = initial_states(6, 1, "s8", 3, 0, 5)
    many = initial_states(6, 1, "s8", 3, 0, 8)
    assert np.array_equal(few, many[:5])
    assert np.array_equal(initial_states(6, 1, "s8", 3, 5, 8), many[5:])


def test_checkpoint_resume_is_bitwise(tmp_path, monkeypatch):
    samples = 3 * CHUNK_SIZE
    reference = run_ensemble(SPEC, samples, seed=2)

    real = ensemble.run_chunk
    calls = {"n": 0}

    def flaky(*args):
        calls["n"] += 1
        if calls["n"] == 2:
            raise KeyboardInterrupt
        return real(*args)

    path = tmp_path / "run.ckpt"
    monkeypatch.setattr(ensemble, "run_chunk", flaky)
    with pytest.raises(KeyboardInterrupt):
        run_ensemble(SPEC, samples, seed=2, checkpoint=path)
    monkeypatch.setattr(ensemble, "run_chunk", real)
    assert path.exists()
    resumed = run_ensemble(SPEC, samples, seed=2, checkpoint=path)
    assert_same(reference, resumed)
    with pytest.raises(CheckpointError):
        run_ensemble(SPEC, samples, seed=3, checkpoint=path)
    with pytest.raises(CheckpointError):
        run_ensemble(SPEC, samples, order=2, seed=2, checkpoint=path)


def test_second_order_starts_from_first_order_initial_state():
    a = run_ensemble(SPEC.with_times((0.0,)), 300, order=1, seed=1)
    b = run_ensemble(SPEC.with_times((0.0,)), 300, order=2, seed=1)
    assert_same(a, b)


def test_schemes_differ_after_the_quench():
    s4 = run_ensemble(SPEC, 1000, scheme="s4", seed=0)
    s8 = run_ensemble(SPEC, 1000, scheme="s8", seed=0)
    t = 2
    diff = np.abs(s4.series.values[t, 1] - s8.series.values[t, 1])
    assert diff > 5 * np.hypot(s4.series.stderr[t, 1], s8.series.stderr[t, 1])


def test_instability_error_carries_result(monkeypatch):
    monkeypatch.setattr(ensemble, "MAX_UNSTABLE_FRACTION", -1.0)
    with pytest.raises(EnsembleInstabilityError) as info:
        run_ensemble(SPEC, 10, seed=0)
    assert info.value.result.series.values.shape == (3, 5)
    res = run_ensemble(SPEC, 10, seed=0, check_stability=False)
    assert np.all(res.unstable_fraction == 0)


def test_features_are_translation_averaged():
    n = 6
    y = initial_states(n, 1, "s8", 0, 0, 3)
    feats = correlation_features(n, 1)(y)
    x = eom.unpack(y, n, 1)[0][:, 0]
    assert feats.shape == (3, n // 2 + 1 + n)
    assert np.allclose(feats[:, 2], np.mean(x * np.roll(x, 2, axis=1), axis=1))
    assert np.array_equal(feats[:, n // 2 + 1 :], np.ones((3, n)))


def test_options_validation():
    for kwargs in (dict(order=3), dict(scheme="s6"), dict(samples=1), dict(integrator="euler"), dict(tol=0.0), dict(seed=-1)):
        with pytest.raises(ValueError):
            EnsembleOptions(**kwargs)
    assert chunk_count(CHUNK_SIZE + 1) == 2
