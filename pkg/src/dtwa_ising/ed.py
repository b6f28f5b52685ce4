"""Brute-force exact diagonalization of small periodic Ising chains.

Basis states are bit strings; bit ``l`` set means spin ``l`` points down
(``sigma^z_l = -1``). All work happens in the even-parity sector, which
contains the ground state of an even periodic chain and is preserved by
the dynamics.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh, expm_multiply

from .model import QuenchSpec, validate_spec

MAX_SITES = 14
DENSE_PROPAGATION_MAX = 10
NORM_TOL = 1e-9


class SizeError(ValueError):
    """Chain too large for exact diagonalization."""


def _check_size(n: int) -> None:
    if n > MAX_SITES:
        raise SizeError(f"exact diagonalization is limited to N <= {MAX_SITES}, got N={n}")
    if n < 2 or n % 2:
        raise SizeError("N must be even and >= 2")


def basis_states(n: int, parity: int | None = 0) -> np.ndarray:
    states = np.arange(2**n, dtype=np.int64)
    if parity is None:
        return states
    return states[_popcount(states) % 2 == parity]


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    count = np.zeros_like(x)
    while x.any():
        count += x & 1
        x >>= 1
    return count


def hamiltonian(n: int, h: float, j: float = 1.0, parity: int | None = 0) -> sp.csr_matrix:
    """Sparse ``H = -J sum sx_l sx_{l+1} - h sum sz_l`` restricted to a parity sector.

    For ``N = 2`` both bonds couple the same pair, giving ``-2J sx_1 sx_2``.
    """
    _check_size(n)
    states = basis_states(n, parity)
    index = np.full(2**n, -1, dtype=np.int64)
    index[states] = np.arange(states.size)
    dim = states.size
    sz_sum = n - 2 * _popcount(states)
    rows = [np.arange(dim)]
    cols = [np.arange(dim)]
    vals = [-h * sz_sum.astype(float)]
    for l in range(n):
        flipped = states ^ ((1 << l) | (1 << ((l + 1) % n)))
        rows.append(index[flipped])
        cols.append(np.arange(dim))
        vals.append(np.full(dim, -j))
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )
    return mat.tocsr()


def ground_state(n: int, h: float, j: float = 1.0) -> tuple[float, np.ndarray]:
    """Even-parity ground state; returns ``(energy, amplitudes over the sector basis)``."""
    ham = hamiltonian(n, h, j)
    if ham.shape[0] <= 512:
        w, v = np.linalg.eigh(ham.toarray())
        energy, vec = w[0], v[:, 0]
    else:
        w, v = eigsh(ham, k=1, which="SA", tol=1e-14, maxiter=100000)
        energy, vec = w[0], v[:, 0]
    vec = vec.astype(complex)
    vec /= np.linalg.norm(vec)
    return float(energy), vec


def to_full(n: int, vec: np.ndarray) -> np.ndarray:
    """Embed a sector vector in the full ``2^N`` space."""
    full = np.zeros(2**n, dtype=complex)
    full[basis_states(n)] = vec
    return full


def xx_correlation(n: int, vec: np.ndarray, d: int, site: int = 0) -> float:
    """``<sigma^x_site sigma^x_{site+d}>`` for a sector state."""
    if d % n == 0:
        return 1.0
    states = basis_states(n)
    index = np.full(2**n, -1, dtype=np.int64)
    index[states] = np.arange(states.size)
    partner = index[states ^ ((1 << (site % n)) | (1 << ((site + d) % n)))]
    val = np.vdot(vec, vec[partner])
    return float(val.real)


def expectation(ham: sp.spmatrix, vec: np.ndarray) -> float:
    return float(np.vdot(vec, ham @ vec).real)


class QuenchED:
    """Dense-vector quench dynamics ``exp(-i H(h_f) t) |gs(h_i)>``.

    Up to ``N = 10`` the final Hamiltonian is fully diagonalized and the
    propagator is exact; larger chains use Krylov ``expm_multiply``.
    """

    def __init__(self, spec: QuenchSpec):
        self.spec = validate_spec(spec)
        _check_size(spec.n)
        _, self.psi0 = ground_state(spec.n, spec.h_i, spec.j)
        self.ham = hamiltonian(spec.n, spec.h_f, spec.j)
        self._eig = None
        if spec.n <= DENSE_PROPAGATION_MAX:
            w, v = np.linalg.eigh(self.ham.toarray())
            self._eig = (w, v, v.conj().T @ self.psi0)

    def state(self, t: float) -> np.ndarray:
        if self._eig is not None:
            w, v, c0 = self._eig
            psi = v @ (np.exp(-1j * w * t) * c0)
        elif t == 0:
            psi = self.psi0.copy()
        else:
            psi = expm_multiply(-1j * t * self.ham, self.psi0)
        drift = abs(np.linalg.norm(psi) - 1.0)
        if drift > NORM_TOL:
            raise ArithmeticError(f"norm drift {drift:.2e} exceeds {NORM_TOL}")
        return psi

    def correlator(self, t: float, d: int, site: int = 0) -> float:
        return xx_correlation(self.spec.n, self.state(t), d, site)

    def correlations(self, t: float, distances) -> np.ndarray:
        psi = self.state(t)
        return np.array([xx_correlation(self.spec.n, psi, int(d)) for d in distances])

    def energy(self, t: float) -> float:
        return expectation(self.ham, self.state(t))


def evolve_and_correlate(spec: QuenchSpec, t: float, d: int) -> float:
    """Exact ``C^xx_d(t)`` by brute force (``N <= 14``)."""
    return QuenchED(spec).correlator(t, d)
