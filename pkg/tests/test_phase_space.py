import numpy as np
import pytest
from hypothesis import given, strategies as st

from dtwa_ising.dtwa.phase_space import (
    IDENTITY,
    PAULI,
    POINTS,
    Z_UP,
    InitialSampler,
    NegativeWeightError,
    PhasePointOperator,
    phase_point_operators,
    spin_table,
    wigner_weights,
)
from dtwa_ising.dtwa.rng import trajectory_rng


def test_spin_tables():
    assert spin_table("A").tolist() == [[1, 1, 1], [-1, -1, 1], [1, -1, -1], [-1, 1, -1]]
    assert spin_table("A'").tolist() == [[1, -1, 1], [-1, 1, 1], [1, 1, -1], [-1, -1, -1]]
    corners = {tuple(r) for rep in ("A", "A'") for r in spin_table(rep)}
    assert len(corners) == 8


def test_invalid_points():
    with pytest.raises(ValueError):
        PhasePointOperator("B", (0, 0))
    with pytest.raises(ValueError):
        PhasePointOperator("A", (2, 0))


@pytest.mark.parametrize("rep", ["A", "A'"])
def test_operator_basis(rep):
    ops = [op.matrix() for op in phase_point_operators(rep)]
    for a in ops:
        assert np.allclose(a, a.conj().T)
        assert np.trace(a).real == pytest.approx(1.0)
    assert np.allclose(sum(ops), 2 * IDENTITY)
    gram = np.array([[np.trace(a @ b).real for b in ops] for a in ops])
    assert np.allclose(gram, 2 * np.eye(4))


def bloch_state(r):
    return 0.5 * (IDENTITY + np.tensordot(r, PAULI, axes=1))


@given(
    r=st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).filter(
        lambda v: np.dot(v, v) <= 1
    ),
    rep=st.sampled_from(["A", "A'"]),
)
def test_weights_reproduce_the_state(r, rep):
    rho = bloch_state(np.array(r))
    w = wigner_weights(rho, rep)
    assert w.sum() == pytest.approx(1.0)
    assert np.allclose(w @ spin_table(rep), r, atol=1e-12)
    ops = [op.matrix() for op in phase_point_operators(rep)]
    assert np.allclose(sum(wi * a for wi, a in zip(w, ops)), rho, atol=1e-12)


def test_z_up_weights():
    assert np.allclose(wigner_weights(Z_UP, "A"), [0.5, 0.5, 0, 0])
    assert np.allclose(wigner_weights(Z_UP, "A'"), [0.5, 0.5, 0, 0])


def test_negative_weights_rejected_for_sampling():
    rho = bloch_state(-np.ones(3) / np.sqrt(3))
    w = wigner_weights(rho, "A")
    assert w.min() < 0
    with pytest.raises(NegativeWeightError):
        wigner_weights(rho, "A", for_sampling=True)
    with pytest.raises(ValueError):
        wigner_weights(np.eye(2), "A")
    with pytest.raises(ValueError):
        wigner_weights(np.array([[1, 1], [0, 0]]), "A")


def draws(scheme, count=4000, n=5):
    sampler = InitialSampler(scheme)
    return np.stack([sampler.draw(n, trajectory_rng(7, r)) for r in range(count)])


@pytest.mark.parametrize("scheme", ["s4", "s8"])
def test_sampled_moments(scheme):
    s = draws(scheme)
    assert np.all(s[:, 2] == 1.0)
    assert np.all(np.abs(s) == 1.0)
    sigma = 1 / np.sqrt(s.shape[0] * s.shape[2])
    assert abs(s[:, 0].mean()) < 4 * sigma
    assert abs(s[:, 1].mean()) < 4 * sigma


def test_s4_locks_sy_to_sx_and_s8_does_not():
    s4, s8 = draws("s4"), draws("s8")
    assert np.all(s4[:, 1] == s4[:, 0])
    assert abs(np.mean(s8[:, 0] * s8[:, 1])) < 0.05


def test_draw_is_deterministic_per_stream():
    sampler = InitialSampler("s8")
    a = sampler.draw(20, trajectory_rng(3, 11))
    b = sampler.draw(20, trajectory_rng(3, 11))
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        InitialSampler("s6")
