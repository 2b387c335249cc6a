"""Conventional Gaussian-envelope codes, the best-envelope scan, and coefficient noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .algebra import CodewordSpec
from .loss import LossBreakdown, LossWeights, l_eg, l_er_bar, l_er_values

FEASIBILITY_TOL = 1e-6


class InfeasibleRangeError(ValueError):
    """No envelope width in the scanned range meets the eigenstate threshold."""


@dataclass(frozen=True)
class EnvelopeParam:
    zeta: float

    def __post_init__(self):
        if not (math.isfinite(self.zeta) and self.zeta > 0):
            raise ValueError(f"zeta must be finite and positive, got {self.zeta}")


@dataclass(frozen=True)
class PerturbationSpec:
    epsilon: float
    draws: int
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.epsilon <= 0.02:
            raise ValueError(f"epsilon {self.epsilon} outside [0, 0.02]")
        if self.draws < 1:
            raise ValueError("draws must be positive")


def envelope(u: int, M: int, zeta: float) -> np.ndarray:
    k = np.arange(-M, M + 1)
    return np.exp(-math.pi * zeta**2 * (2 * k + u) ** 2 / 2)


def conventional_code(u: int, M: int, r: float, zeta: float) -> CodewordSpec:
    if M < 0:
        raise ValueError("M must be non-negative")
    return CodewordSpec(u, M, r, envelope(u, M, zeta).astype(complex))


def conventional_pair(M: int, r: float, zeta: float) -> tuple[CodewordSpec, CodewordSpec]:
    return conventional_code(0, M, r, zeta), conventional_code(1, M, r, zeta)


def zeta_scan(M: int, r: float, zetas, grid) -> list[tuple[float, float, float]]:
    """Rows of (zeta, l_er_bar, l_eg)."""
    out = []
    for z in zetas:
        pair = conventional_pair(M, r, float(z))
        out.append((float(z), l_er_bar(*pair, grid), l_eg(*pair)))
    return out


def best_conventional(M: int, r: float, zeta_range=(0.1, 0.6), grid=None, points: int = 41, xatol: float = 1e-6):
    """Feasible envelope width minimizing the averaged KL loss.

    A coarse scan over ``zeta_range`` picks the best feasible point, then a
    bounded scalar search refines it between the neighbouring scan points.
    """
    weights = LossWeights() if grid is None else LossWeights(grid=grid)
    lo, hi = map(float, zeta_range)
    if hi < lo:
        raise ValueError(f"empty zeta range {zeta_range}")
    zetas = np.linspace(lo, hi, points) if hi > lo else np.array([lo])
    rows = zeta_scan(M, r, zetas, weights.grid)
    feasible = [i for i, row in enumerate(rows) if row[2] <= FEASIBILITY_TOL]
    if not feasible:
        raise InfeasibleRangeError(f"no zeta in [{lo}, {hi}] satisfies l_eg <= {FEASIBILITY_TOL}")
    i = min(feasible, key=lambda t: rows[t][1])
    zeta = rows[i][0]
    if hi > lo:
        a = rows[max(i - 1, 0)][0]
        b = rows[min(i + 1, len(rows) - 1)][0]

        def objective(z):
            pair = conventional_pair(M, r, z)
            return l_er_bar(*pair, weights.grid) if l_eg(*pair) <= FEASIBILITY_TOL else math.inf

        res = minimize_scalar(objective, bounds=(a, b), method="bounded", options={"xatol": xatol})
        if res.fun < rows[i][1]:
            zeta = float(res.x)
    pair = conventional_pair(M, r, zeta)
    vals = l_er_values(*pair, weights.grid)
    bar = math.fsum(vals) / len(vals)
    breakdown = LossBreakdown(l_er_bar=bar, l_eg=l_eg(*pair), l_st=math.nan, l_tot=math.nan, l_er=tuple(vals))
    return EnvelopeParam(zeta), breakdown


def _stream(seed: int, draw_index: int, u: int) -> np.random.Generator:
    # Philox is counter-based: each (seed, draw, codeword) triple owns its own key,
    # so draws can be generated in any order or on any worker.
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, draw_index, u])))


def perturb(code: CodewordSpec, spec: PerturbationSpec, draw_index: int) -> CodewordSpec:
    """Multiply each coefficient by a real factor ``1 + eps * xi`` with xi ~ U[-0.5, 0.5]."""
    if spec.epsilon == 0:
        return code
    xi = _stream(spec.seed, draw_index, code.u).uniform(-0.5, 0.5, size=code.coeffs.shape)
    return code.with_coeffs(code.coeffs * (1 + spec.epsilon * xi))


@dataclass(frozen=True)
class RobustnessPoint:
    epsilon: float
    mean_gain: float
    var_conventional: float
    var_optimal: float

    @property
    def variance_ratio(self) -> float:
        return self.var_conventional / self.var_optimal if self.var_optimal > 0 else math.nan


def robustness_point(opt_pair, conv_pair, spec: PerturbationSpec, grid) -> RobustnessPoint:
    if spec.draws < 2:
        raise ValueError("robustness statistics need at least two draws")
    lo, lc = np.empty(spec.draws), np.empty(spec.draws)
    for d in range(spec.draws):
        lo[d] = l_er_bar(*(perturb(c, spec, d) for c in opt_pair), grid)
        lc[d] = l_er_bar(*(perturb(c, spec, d) for c in conv_pair), grid)
    return RobustnessPoint(spec.epsilon, float(np.mean(lc / lo)), float(np.var(lc, ddof=1)), float(np.var(lo, ddof=1)))


def robustness_study(opt_pair, conv_pair, epsilons, draws: int, seed: int, grid) -> list[RobustnessPoint]:
    return [robustness_point(opt_pair, conv_pair, PerturbationSpec(e, draws, seed), grid) for e in epsilons]
