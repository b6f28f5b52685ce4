"""Quench dynamics of the transverse-field Ising chain: exact free-fermion
solution, exact diagonalization, and discrete truncated Wigner sampling."""

__version__ = "0.1.0"
