import numpy as np
import pytest
from hypothesis import given, strategies as st

from dtwa_ising.pfaffian import pfaffian


def random_antisymmetric(n, seed):
    a = np.random.default_rng(seed).normal(size=(n, n))
    return a - a.T


def test_small_cases():
    assert pfaffian(np.zeros((0, 0))) == 1.0
    assert pfaffian(np.array([[0.0, 2.5], [-2.5, 0.0]])) == 2.5
    # Pf of a 4x4 is a01 a23 - a02 a13 + a03 a12
    a = random_antisymmetric(4, 1)
    expected = a[0, 1] * a[2, 3] - a[0, 2] * a[1, 3] + a[0, 3] * a[1, 2]
    assert pfaffian(a) == pytest.approx(expected, rel=1e-12)
    assert pfaffian(random_antisymmetric(5, 2)) == 0.0


def test_rejects_non_antisymmetric():
    with pytest.raises(ValueError):
        pfaffian(np.ones((4, 4)))
    with pytest.raises(ValueError):
        pfaffian(np.zeros((2, 3)))


@given(k=st.integers(1, 10), seed=st.integers(0, 2**32 - 1))
def test_square_is_determinant(k, seed):
    a = random_antisymmetric(2 * k, seed)
    assert pfaffian(a) ** 2 == pytest.approx(np.linalg.det(a), rel=1e-8, abs=1e-10)


@given(k=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_congruence_rule(k, seed):
    # Pf(B A B^T) = det(B) Pf(A) fixes the sign as well as the magnitude
    rng = np.random.default_rng(seed)
    a = random_antisymmetric(2 * k, seed)
    b = rng.normal(size=(2 * k, 2 * k))
    assert pfaffian(b @ a @ b.T) == pytest.approx(np.linalg.det(b) * pfaffian(a), rel=1e-7, abs=1e-9)
