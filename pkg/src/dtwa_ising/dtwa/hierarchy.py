"""Symbolic generation of the moment hierarchy, used as a reference.

Operators are sums of Pauli strings. A string is a sorted tuple of
``(site, a)`` pairs with ``a in {0, 1, 2}`` for ``x, y, z``; identity
factors are dropped. Heisenberg derivatives ``i [H, O]`` of one- and
two-site strings are expanded exactly, then closed by setting connected
three-point cumulants to zero.

This is slow, pure-Python bookkeeping meant for small chains. The
vectorized right-hand side in :mod:`.eom` is checked against it.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations

import numpy as np

Pauli = tuple[tuple[int, int], ...]
Operator = dict[Pauli, complex]

_EPS = np.zeros((3, 3, 3))
for _a, _b, _c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _EPS[_a, _b, _c] = 1.0
    _EPS[_b, _a, _c] = -1.0


def _site_product(a: int, b: int) -> tuple[complex, int | None]:
    """``sigma^a sigma^b = coef * sigma^c`` (``c = None`` for the identity)."""
    if a == b:
        return 1.0 + 0j, None
    c = 3 - a - b
    return 1j * _EPS[a, b, c], c


def string_product(p: Pauli, q: Pauli) -> tuple[complex, Pauli]:
    coef = 1.0 + 0j
    ops = dict(p)
    for site, b in q:
        if site in ops:
            f, c = _site_product(ops[site], b)
            coef *= f
            if c is None:
                del ops[site]
            else:
                ops[site] = c
        else:
            ops[site] = b
    return coef, tuple(sorted(ops.items()))


def commutator(h: Operator, o: Operator) -> Operator:
    out: Operator = defaultdict(complex)
    for p, cp in h.items():
        for q, cq in o.items():
            f1, r1 = string_product(p, q)
            f2, r2 = string_product(q, p)
            out[r1] += cp * cq * f1
            out[r2] -= cp * cq * f2
    return {k: v for k, v in out.items() if abs(v) > 1e-14}


def ising_terms(n: int) -> tuple[Operator, Operator]:
    """``(-sum X_l X_{l+1}, -sum Z_l)`` as operators; multiply by ``J`` and ``h``."""
    bond: Operator = defaultdict(complex)
    for l in range(n):
        key = tuple(sorted(((l, 0), ((l + 1) % n, 0)))) if n > 1 else ()
        bond[key] -= 1.0
    field = {((l, 2),): -1.0 + 0j for l in range(n)}
    return dict(bond), field


def heisenberg(n: int, o: Operator) -> tuple[Operator, Operator]:
    """``i [H, O]`` split into its ``J`` and ``h`` parts."""
    bond, field = ising_terms(n)
    parts = []
    for term in (bond, field):
        com = commutator(term, o)
        parts.append({k: 1j * v for k, v in com.items()})
    for part in parts:
        for key, val in part.items():
            if abs(val.imag) > 1e-12:
                raise ArithmeticError(f"non-Hermitian derivative term {key}: {val}")
    return parts[0], parts[1]


@dataclass
class GeneratedHierarchy:
    """Derivatives of all one- and two-site moments of an ``n`` site chain.

    ``bond[target]`` and ``field[target]`` list ``(coefficient, string)``
    pairs; the derivative of ``<target>`` is
    ``J * sum(bond) + h * sum(field)`` over string expectations.
    """

    n: int
    bond: dict[Pauli, list[tuple[float, Pauli]]]
    field: dict[Pauli, list[tuple[float, Pauli]]]

    def targets(self):
        return list(self.bond)


def generate(n: int) -> GeneratedHierarchy:
    bond_eq, field_eq = {}, {}
    targets = [((i, a),) for i in range(n) for a in range(3)]
    targets += [
        ((i, a), (j, b)) for i, j in combinations(range(n), 2) for a in range(3) for b in range(3)
    ]
    for target in targets:
        b, f = heisenberg(n, {target: 1.0 + 0j})
        bond_eq[target] = [(v.real, k) for k, v in sorted(b.items())]
        field_eq[target] = [(v.real, k) for k, v in sorted(f.items())]
    return GeneratedHierarchy(n, bond_eq, field_eq)


def closed_expectation(string: Pauli, s: np.ndarray, c: np.ndarray | None) -> float:
    """``<string>`` from means and connected pairs, dropping three-point cumulants."""
    if not string:
        return 1.0
    sites = [site for site, _ in string]
    comps = [a for _, a in string]
    m = [s[a, i] for i, a in zip(sites, comps)]

    def pair(p, q):
        if c is None:
            return 0.0
        return c[comps[p], comps[q], sites[p], sites[q]]

    if len(string) == 1:
        return m[0]
    if len(string) == 2:
        return m[0] * m[1] + pair(0, 1)
    if len(string) == 3:
        return (
            m[0] * m[1] * m[2]
            + m[0] * pair(1, 2)
            + m[1] * pair(0, 2)
            + m[2] * pair(0, 1)
        )
    raise ValueError("strings longer than three sites do not occur at this order")


def _derivative(eqs, target, h, j, evaluate):
    total = 0.0
    for coef, string in eqs.bond[target]:
        total += j * coef * evaluate(string)
    for coef, string in eqs.field[target]:
        total += h * coef * evaluate(string)
    return total


def reference_rhs(eqs: GeneratedHierarchy, s: np.ndarray, c: np.ndarray | None, h: float, j: float = 1.0):
    """Closed derivatives ``(ds, dc)`` for one state (``s`` is ``(3, N)``).

    With ``c = None`` the pair cumulants are taken as zero and only ``ds``
    is returned, which is the first-order (mean-field) flow when
    single-site products are also factorized.
    """
    n = eqs.n

    def evaluate(string):
        return closed_expectation(string, s, c)

    ds = np.zeros((3, n))
    for i in range(n):
        for a in range(3):
            ds[a, i] = _derivative(eqs, ((i, a),), h, j, evaluate)
    if c is None:
        return ds
    dc = np.zeros((3, 3, n, n))
    for i, k in combinations(range(n), 2):
        for a in range(3):
            for b in range(3):
                d_pair = _derivative(eqs, ((i, a), (k, b)), h, j, evaluate)
                val = d_pair - ds[a, i] * s[b, k] - s[a, i] * ds[b, k]
                dc[a, b, i, k] = val
                dc[b, a, k, i] = val
    return ds, dc


def exact_rhs(eqs: GeneratedHierarchy, expect, h: float, j: float = 1.0):
    """Unclosed derivatives of all targets given an exact expectation function."""
    return {target: _derivative(eqs, target, h, j, expect) for target in eqs.targets()}
