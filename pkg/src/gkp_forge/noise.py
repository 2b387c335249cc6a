"""First-order Kraus operators for photon loss and dephasing, and their pair products.

    A1 = I - (kt/2) n - (kpt/2) n^2,   A2 = sqrt(kt) a,   A3 = sqrt(kpt) n

with ``kt = kappa*tau`` and ``kpt = kappa_phi*tau``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from .algebra import CodewordSpec, matrix_element
from .monomials import Monomial

KRAUS_INDICES = (1, 2, 3)


@dataclass(frozen=True)
class NoiseScale:
    kappa_tau: float
    kappa_phi_tau: float

    def __post_init__(self):
        if self.kappa_tau < 0 or self.kappa_phi_tau < 0:
            raise ValueError(f"noise rates must be non-negative: {self}")
        if self.kappa_tau > 0.05 or self.kappa_phi_tau > 0.05:
            warnings.warn(f"{self} is outside the short-time regime of the Kraus expansion", stacklevel=2)


class OperatorPoly:
    """Immutable linear combination of basis monomials."""

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        clean = {}
        for m, c in (terms or {}).items():
            c = complex(c)
            if c != 0:
                clean[Monomial(m)] = clean.get(Monomial(m), 0) + c
        self._terms = MappingProxyType({m: c for m, c in clean.items() if c != 0})

    @property
    def terms(self):
        return self._terms

    def adjoint(self) -> "OperatorPoly":
        return OperatorPoly({m.adjoint: c.conjugate() for m, c in self._terms.items()})

    def __eq__(self, other):
        return isinstance(other, OperatorPoly) and dict(self._terms) == dict(other._terms)

    def __repr__(self):
        inner = ", ".join(f"{m.value}: {c:.6g}" for m, c in self._terms.items())
        return f"OperatorPoly({{{inner}}})"

    def isclose(self, other: "OperatorPoly", tol=1e-15) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0) - other._terms.get(k, 0)) <= tol for k in keys)


def kraus_polys(scale: NoiseScale) -> tuple[OperatorPoly, OperatorPoly, OperatorPoly]:
    kt, kpt = scale.kappa_tau, scale.kappa_phi_tau
    A1 = OperatorPoly({Monomial.I: 1, Monomial.N: -kt / 2, Monomial.N2: -kpt / 2})
    A2 = OperatorPoly({Monomial.A: math.sqrt(kt)})
    A3 = OperatorPoly({Monomial.N: math.sqrt(kpt)})
    return A1, A2, A3


def _canonical(j: int, i: int, kt: float, kpt: float) -> dict:
    x, y = kt / 2, kpt / 2
    s, sp = math.sqrt(kt), math.sqrt(kpt)
    M = Monomial
    if (j, i) == (1, 1):
        # (I - x n - y n^2)^2
        return {M.I: 1, M.N: -2 * x, M.N2: x * x - 2 * y, M.N3: 2 * x * y, M.N4: y * y}
    if (j, i) == (1, 2):
        return {M.A: s, M.N_A: -x * s, M.N2_A: -y * s}
    if (j, i) == (1, 3):
        return {M.N: sp, M.N2: -x * sp, M.N3: -y * sp}
    if (j, i) == (2, 2):
        return {M.N: kt}
    if (j, i) == (2, 3):
        # a^dag n = (n a)^dag; n a = a^dag a a
        return {M.A_DAG_N: s * sp}
    if (j, i) == (3, 3):
        return {M.N2: kpt}
    raise AssertionError((j, i))


def pair_product(j: int, i: int, scale: NoiseScale) -> OperatorPoly:
    """``A_j^dag A_i`` expanded over the monomial basis."""
    if j not in KRAUS_INDICES or i not in KRAUS_INDICES:
        raise ValueError(f"Kraus index out of range: ({j}, {i})")
    if j > i:
        return pair_product(i, j, scale).adjoint()
    return OperatorPoly(_canonical(j, i, scale.kappa_tau, scale.kappa_phi_tau))


def pair_coefficient_table(scales) -> tuple[list[Monomial], np.ndarray]:
    """Coefficients of every pair product over many scales at once.

    Returns ``(monomials, P)`` with ``P[s, j-1, i-1, m]`` the coefficient of
    ``monomials[m]`` in ``A_j^dag A_i`` at ``scales[s]``.
    """
    monos = list(Monomial)
    index = {m: t for t, m in enumerate(monos)}
    P = np.zeros((len(scales), 3, 3, len(monos)), dtype=complex)
    for s, sc in enumerate(scales):
        for j in KRAUS_INDICES:
            for i in KRAUS_INDICES:
                for m, c in pair_product(j, i, sc).terms.items():
                    P[s, j - 1, i - 1, index[m]] = c
    return monos, P


def poly_matrix_element(bra: CodewordSpec, ket: CodewordSpec, poly: OperatorPoly) -> complex:
    return sum((c * matrix_element(bra, ket, m) for m, c in poly.terms.items()), 0j)
