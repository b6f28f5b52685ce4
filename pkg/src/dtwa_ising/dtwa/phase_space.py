"""Four-point discrete phase space of a spin 1/2.

A point ``alpha = (a1, a2)`` with ``a1, a2 in {0, 1}`` carries the
phase-point operator ``A_alpha = (1 + s . sigma) / 2`` where the spin
vector ``s`` has entries ``+-1``:

    representation A :  s = ((-1)^a1,  (-1)^(a1+a2), (-1)^a2)
    representation A':  s = ((-1)^a1, -(-1)^(a1+a2), (-1)^a2)

Each representation reaches four corners of the spin cube; together they
reach all eight. Weights are ``w(alpha) = Tr(rho A_alpha) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

REPRESENTATIONS = ("A", "A'")
SCHEMES = ("s4", "s8")
POINTS = ((0, 0), (1, 0), (0, 1), (1, 1))
NEGATIVITY_TOL = 1e-12

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
IDENTITY = np.eye(2, dtype=complex)


class NegativeWeightError(ValueError):
    """The discrete Wigner function has negative entries and cannot be sampled."""


@dataclass(frozen=True)
class PhasePointOperator:
    representation: str
    alpha: tuple[int, int]

    def __post_init__(self):
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")
        if tuple(self.alpha) not in POINTS:
            raise ValueError(f"alpha must be in {POINTS}")

    @property
    def spins(self) -> tuple[int, int, int]:
        a1, a2 = self.alpha
        sy = (-1) ** (a1 + a2)
        if self.representation == "A'":
            sy = -sy
        return ((-1) ** a1, sy, (-1) ** a2)

    def matrix(self) -> np.ndarray:
        s = np.array(self.spins, dtype=float)
        return 0.5 * (IDENTITY + np.tensordot(s, PAULI, axes=1))


def phase_point_operators(rep: str) -> list[PhasePointOperator]:
    return [PhasePointOperator(rep, a) for a in POINTS]


def spin_table(rep: str) -> np.ndarray:
    """Spin vectors of the four points, shape ``(4, 3)`` in ``POINTS`` order."""
    return np.array([op.spins for op in phase_point_operators(rep)], dtype=float)


def wigner_weights(rho: np.ndarray, rep: str = "A", for_sampling: bool = False) -> np.ndarray:
    """Weights ``Tr(rho A_alpha) / 2`` in ``POINTS`` order; they sum to one."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("single-site density operator must be 2x2")
    if not np.allclose(rho, rho.conj().T, atol=1e-12):
        raise ValueError("density operator must be Hermitian")
    if abs(np.trace(rho) - 1) > 1e-12:
        raise ValueError("density operator must have unit trace")
    w = np.array([0.5 * np.trace(rho @ op.matrix()).real for op in phase_point_operators(rep)])
    if for_sampling and np.any(w < -NEGATIVITY_TOL):
        raise NegativeWeightError(f"negative Wigner weights {w} in representation {rep}")
    return w


Z_UP = np.array([[1, 0], [0, 0]], dtype=complex)


class InitialSampler:
    """Samples spin configurations of the product state ``rho^(x n)``.

    ``s4`` samples every site from representation A; ``s8`` picks A or A'
    per site with equal probability and then samples that representation.
    """

    def __init__(self, scheme: str, rho: np.ndarray = Z_UP):
        scheme = scheme.lower()
        if scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        self.scheme = scheme
        self.tables = [spin_table(rep) for rep in REPRESENTATIONS]
        self.cdfs = []
        for rep in REPRESENTATIONS:
            w = np.clip(wigner_weights(rho, rep, for_sampling=True), 0, None)
            self.cdfs.append(np.cumsum(w) / w.sum())

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """One configuration, shape ``(3, n)``."""
        # both uniforms are drawn for either scheme so the stream layout is shared
        u_rep = rng.random(n)
        u_point = rng.random(n)
        rep_index = (u_rep < 0.5).astype(int) if self.scheme == "s8" else np.zeros(n, dtype=int)
        out = np.empty((3, n))
        for r in (0, 1):
            sites = rep_index == r
            if sites.any():
                point = np.minimum(np.searchsorted(self.cdfs[r], u_point[sites], side="right"), 3)
                out[:, sites] = self.tables[r][point].T
        return out


def sample_initial(n: int, scheme: str, rng: np.random.Generator, rho: np.ndarray = Z_UP) -> np.ndarray:
    """Draw one spin configuration, shape ``(3, n)``; see :class:`InitialSampler`."""
    return InitialSampler(scheme, rho).draw(n, rng)
