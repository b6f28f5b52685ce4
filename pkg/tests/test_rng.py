import numpy as np
import pytest
from hypothesis import given, strategies as st

from dtwa_ising.dtwa.rng import SEED_MAX, check_seed, trajectory_rng


def test_seed_range():
    assert check_seed(SEED_MAX) == SEED_MAX
    for bad in (-1, SEED_MAX + 1):
        with pytest.raises(ValueError):
            check_seed(bad)
    with pytest.raises(ValueError):
        trajectory_rng(0, -1)


@given(seed=st.integers(0, SEED_MAX), index=st.integers(0, 10**9))
def test_streams_are_reproducible_and_distinct(seed, index):
    a = trajectory_rng(seed, index).random(8)
    assert np.array_equal(a, trajectory_rng(seed, index).random(8))
    assert not np.array_equal(a, trajectory_rng(seed, index + 1).random(8))


def test_stream_does_not_depend_on_creation_order():
    forward = [trajectory_rng(5, r).random(3) for r in range(10)]
    backward = [trajectory_rng(5, r).random(3) for r in reversed(range(10))][::-1]
    assert np.array_equal(np.array(forward), np.array(backward))


def test_neighbouring_seeds_are_uncorrelated():
    a = trajectory_rng(1, 0).random(20000)
    b = trajectory_rng(2, 0).random(20000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.03
