"""Scalar objectives for approximate GKP code design.

    L_er    = |delta| + sum_ij (|eps_ji| + |zeta_ij|)            (one noise point)
    L_er_bar = mean of L_er over a grid of noise points
    L_eg    = sum_u max(0, exp(-pi e^{-2r}) - Re<u|S_p|u>)
    L_st    = sum_u sum_O |1 - <u|O|u>|^2,  O in {Sq, Sp, Sq^dag Sq, Sp^dag Sp}
    L_tot   = (1 - eta1 - eta2) L_er_bar + eta1 L_st + eta2 L_eg
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    CodewordSpec,
    FMatrix,
    matrix_element,
    stabilizer_expectation_p,
    stabilizer_expectation_q,
    stabilizer_terms,
)
from .monomials import Monomial
from .noise import NoiseScale, pair_coefficient_table

MONOMIALS = list(Monomial)


def default_grid(n: int = 6, hi: float = 0.005) -> list[NoiseScale]:
    """Uniform n x n lattice over [0, hi]^2."""
    pts = np.linspace(0.0, hi, n)
    return [NoiseScale(float(a), float(b)) for a in pts for b in pts]


@dataclass(frozen=True)
class KLReport:
    delta: complex
    epsilon: np.ndarray  # epsilon[j-1, i-1]
    zeta: np.ndarray  # zeta[j-1, i-1] = <0|A_j^dag A_i|1>


@dataclass(frozen=True)
class PairMoments:
    """All normalized monomial matrix elements ``<u|m|v>`` for a codeword pair."""

    values: np.ndarray  # values[u, v, m], m indexes MONOMIALS

    @classmethod
    def of(cls, code0: CodewordSpec, code1: CodewordSpec) -> "PairMoments":
        codes = (code0, code1)
        vals = np.empty((2, 2, len(MONOMIALS)), dtype=complex)
        for u in (0, 1):
            for v in (0, 1):
                for t, m in enumerate(MONOMIALS):
                    vals[u, v, t] = matrix_element(codes[u], codes[v], m)
        return cls(vals)

    def kl_reports(self, scales) -> tuple[np.ndarray, np.ndarray, complex]:
        """(epsilon[s, j, i], zeta[s, j, i], delta) for every scale."""
        _, P = pair_coefficient_table(scales)
        diff = self.values[1, 1] - self.values[0, 0]
        eps = P @ diff
        zeta = P @ self.values[0, 1]
        delta = self.values[0, 1, MONOMIALS.index(Monomial.I)]
        return eps, zeta, delta


def kl_report(code0: CodewordSpec, code1: CodewordSpec, scale: NoiseScale) -> KLReport:
    eps, zeta, delta = PairMoments.of(code0, code1).kl_reports([scale])
    return KLReport(delta=delta, epsilon=eps[0], zeta=zeta[0])


def l_er(report: KLReport) -> float:
    return float(abs(report.delta) + np.abs(report.epsilon).sum() + np.abs(report.zeta).sum())


def l_er_values(code0: CodewordSpec, code1: CodewordSpec, grid) -> np.ndarray:
    if len(grid) == 0:
        raise ValueError("noise grid is empty")
    eps, zeta, delta = PairMoments.of(code0, code1).kl_reports(grid)
    return abs(delta) + np.abs(eps).sum(axis=(1, 2)) + np.abs(zeta).sum(axis=(1, 2))


def l_er_bar(code0: CodewordSpec, code1: CodewordSpec, grid) -> float:
    vals = l_er_values(code0, code1, grid)
    return float(math.fsum(vals) / len(vals))


def l_eg(code0: CodewordSpec, code1: CodewordSpec, r: float | None = None) -> float:
    r = code0.r if r is None else r
    thr = stabilizer_expectation_q(r)
    return sum(max(0.0, thr - stabilizer_expectation_p(c).real) for c in (code0, code1))


def l_st_terms(code0: CodewordSpec, code1: CodewordSpec, f: FMatrix) -> dict[str, float]:
    out = {}
    for u, code in enumerate((code0, code1)):
        for name, val in stabilizer_terms(code, f).items():
            out[f"u={u} {name}"] = abs(1 - val) ** 2
    return out


def l_st(code0: CodewordSpec, code1: CodewordSpec, f: FMatrix) -> float:
    return math.fsum(l_st_terms(code0, code1, f).values())


@dataclass(frozen=True)
class LossWeights:
    eta1: float = 0.02
    eta2: float = 0.02
    grid: list = field(default_factory=default_grid)
    threshold_r: float | None = None

    def __post_init__(self):
        if not (self.eta1 > 0 and self.eta2 > 0 and self.eta1 + self.eta2 < 1):
            raise ValueError(f"invalid loss weights ({self.eta1}, {self.eta2})")


@dataclass(frozen=True)
class LossBreakdown:
    l_er_bar: float
    l_eg: float
    l_st: float
    l_tot: float
    l_er: tuple = ()


def combine(l_er_bar_value: float, l_st_value: float, l_eg_value: float, weights: LossWeights, per_point=()) -> LossBreakdown:
    w0 = 1 - weights.eta1 - weights.eta2
    tot = w0 * l_er_bar_value + weights.eta1 * l_st_value + weights.eta2 * l_eg_value
    return LossBreakdown(l_er_bar_value, l_eg_value, l_st_value, tot, tuple(per_point))


def l_tot(code0: CodewordSpec, code1: CodewordSpec, f: FMatrix, weights: LossWeights) -> LossBreakdown:
    vals = l_er_values(code0, code1, weights.grid)
    bar = math.fsum(vals) / len(vals)
    return combine(bar, l_st(code0, code1, f), l_eg(code0, code1, weights.threshold_r), weights, vals)


def f_er(f: FMatrix) -> float:
    return abs(f.f11 - 1) + abs(f.f22 - 1) + abs(f.f12) + abs(f.f21)


def gain(l_conventional: float, l_optimal: float) -> float:
    """Conventional over optimal; above one means the optimized code wins."""
    if l_optimal == 0:
        raise ZeroDivisionError("optimal loss is zero")
    return l_conventional / l_optimal
