import numpy as np
import pytest
from hypothesis import given, strategies as st

from dtwa_ising.dtwa.checkpoint import CheckpointError, Moments, load_checkpoint, run_digest, save_checkpoint


@given(
    seed=st.integers(0, 2**32 - 1),
    split=st.integers(1, 29),
)
def test_chan_merge_matches_direct_moments(seed, split):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(3, 30, 4))
    valid = rng.random((3, 30)) > 0.2
    whole = Moments.from_samples(values, valid)
    merged = Moments.from_samples(values[:, :split], valid[:, :split]).merge(
        Moments.from_samples(values[:, split:], valid[:, split:])
    )
    assert np.array_equal(merged.count, whole.count)
    assert np.allclose(merged.mean, whole.mean, atol=1e-12)
    assert np.allclose(merged.m2, whole.m2, atol=1e-10)


def test_stderr_is_standard_error_of_mean():
    values = np.arange(10.0).reshape(1, 10, 1)
    m = Moments.from_samples(values, np.ones((1, 10), dtype=bool))
    assert m.stderr()[0, 0] == pytest.approx(np.std(values, ddof=1) / np.sqrt(10))
    assert np.isnan(Moments.empty(1, 1).stderr()).all()


def test_round_trip_and_rejections(tmp_path):
    rng = np.random.default_rng(0)
    m = Moments(rng.random(4), rng.random((4, 3)), rng.random((4, 3)))
    path = tmp_path / "run.ckpt"
    digest = run_digest("identity")
    save_checkpoint(path, digest, 17, 500, m)
    assert path.stat().st_size == 80 + 8 * (4 + 24)
    completed, back = load_checkpoint(path, digest, 17)
    assert completed == 500
    for a, b in zip((m.count, m.mean, m.m2), (back.count, back.mean, back.m2)):
        assert np.array_equal(a, b)
    with pytest.raises(CheckpointError, match="different run"):
        load_checkpoint(path, run_digest("other"), 17)
    with pytest.raises(CheckpointError, match="seed"):
        load_checkpoint(path, digest, 18)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(CheckpointError):
        load_checkpoint(path, digest, 17)
    path.write_bytes(b"garbage" * 20)
    with pytest.raises(CheckpointError):
        load_checkpoint(path, digest, 17)
