"""End-to-end self checks used by ``gkp-forge verify``.

Each group returns ``{"group", "passed", "measured", "tolerance"}``.
"""

from __future__ import annotations

import math

import numpy as np

from .algebra import (
    SQRT_2PI,
    CodewordSpec,
    ExpLinearOp,
    FMatrix,
    exp_linear_expectation,
    gaussian_overlap,
    normalization,
    stabilizer_expectation_q,
)
from .fock import codeword_vector, monomial_matrix
from .kernels import KERNELS
from .monomials import Monomial
from .noise import NoiseScale


def random_code(rng, u, M, r) -> CodewordSpec:
    c = rng.normal(size=2 * M + 1) + 1j * rng.normal(size=2 * M + 1)
    return CodewordSpec(u, M, r, c)


def analytic_element(bra: CodewordSpec, ket: CodewordSpec, op: Monomial, kernels=None) -> complex:
    """Normalized ``<bra|op|ket>`` from a (possibly substituted) kernel table."""
    kernels = KERNELS if kernels is None else kernels
    if not op.direct:
        return analytic_element(ket, bra, op.adjoint, kernels).conjugate()
    bk, bl = bra.beta[:, None], ket.beta[None, :]
    lam, lam1 = math.cosh(bra.r), math.sinh(bra.r)
    K = kernels[op](np.conj(bk), bl, lam, lam1) * gaussian_overlap(bk, bl)
    return complex(bra.coeffs.conj() @ K @ ket.coeffs) / (normalization(bra) * normalization(ket))


def oracle_deviation(bra, ket, op, n_trunc=300, kernels=None, vectors=None) -> float:
    """Deviation from the Fock oracle relative to ``||op|ket>||`` (Cauchy-Schwarz scale)."""
    if vectors is None:
        vectors = codeword_vector(bra, n_trunc), codeword_vector(ket, n_trunc)
    vb, vk = vectors
    Ov = monomial_matrix(op, n_trunc) @ vk
    fock = complex(np.vdot(vb, Ov))
    scale = max(np.linalg.norm(Ov), 1e-300)
    return abs(analytic_element(bra, ket, op, kernels) - fock) / scale


def kernel_group(seed=0, n_codes=5, kernels=None, tol=1e-7):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_codes):
        M = int(rng.integers(0, 3))
        r = float(rng.uniform(0.2, 1.2))
        a, b = random_code(rng, 0, M, r), random_code(rng, 1, M, r)
        vec = {0: codeword_vector(a), 1: codeword_vector(b)}
        for op in Monomial:
            for bra, ket in ((a, a), (a, b), (b, a), (b, b)):
                dev = oracle_deviation(bra, ket, op, kernels=kernels, vectors=(vec[bra.u], vec[ket.u]))
                worst = max(worst, dev)
    return {"group": "kernel-oracle", "passed": bool(worst < tol), "measured": float(worst), "tolerance": tol}


def closed_form_group(seed=0, n_codes=5, tol=1e-10):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_codes):
        r = float(rng.uniform(0.5, 1.3))
        code = random_code(rng, int(rng.integers(0, 2)), int(rng.integers(0, 4)), r)
        sq = ExpLinearOp.displacement(1j * SQRT_2PI)
        worst = max(worst, abs(exp_linear_expectation(sq, code, code) - stabilizer_expectation_q(r)))
    return {"group": "stabilizer-closed-form", "passed": bool(worst < tol), "measured": float(worst), "tolerance": tol}


def gradient_group(seed=0, tol=1e-6):
    from .optimizer import N_MLP, LossModel, init_params

    rng = np.random.default_rng(seed)
    model = LossModel(3, 1.1)
    theta = init_params(seed)
    theta[N_MLP:] += rng.normal(scale=0.05, size=6)
    _, g = model.value_and_grad(theta)
    h = 1e-5
    fd = np.array([(model.value(theta + h * e).l_tot - model.value(theta - h * e).l_tot) / (2 * h) for e in np.eye(len(theta))])
    err = float(np.abs(g - fd).max() / np.abs(fd).max())
    return {"group": "gradient", "passed": bool(err < tol), "measured": err, "tolerance": tol}


def sdp_group(tol=1e-9):
    from . import reference as ref
    from .recovery import optimal_recovery

    res = optimal_recovery(ref.complex_optimum(), NoiseScale(0.0, 0.0))
    dev = abs(res.solution.fidelity - 1)
    return {"group": "sdp-zero-noise", "passed": bool(dev < tol and res.solution.gap < 1e-8), "measured": float(dev), "tolerance": tol}


def determinant_group(seed=0, tol=1e-12):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        f11, f12, f21 = rng.normal(size=3) + 1j * rng.normal(size=3)
        f = FMatrix.from_free(f11 + 2, f12, f21)
        worst = max(worst, abs(f.f11 * f.f22 - f.f12 * f.f21 - 1))
    return {"group": "unit-determinant", "passed": bool(worst < tol), "measured": float(worst), "tolerance": tol}


def run_all(seed=0, n_codes=5):
    return [
        kernel_group(seed, n_codes),
        closed_form_group(seed, n_codes),
        determinant_group(seed),
        gradient_group(seed),
        sdp_group(),
    ]
