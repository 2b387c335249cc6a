"""Truncation-free algebra of approximate square GKP codewords.

A codeword is ``|u_L> = (1/N(u)) sum_k c_k |alpha_k, r>`` with the fixed grid
``alpha_k = sqrt(pi/2) (2k + u)``, ``k = -M..M``.  Everything here is evaluated
in the squeezed frame, where ``|alpha, r> = S(r)|beta>`` is a plain coherent
state of the squeezed mode with ``beta = cosh(r) alpha + sinh(r) conj(alpha)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import KERNELS
from .monomials import Monomial

SQRT_PI_2 = math.sqrt(math.pi / 2)
SQRT_2PI = math.sqrt(2 * math.pi)


class DegenerateCodeError(ValueError):
    """Coefficients give a null or numerically invalid state."""


def grid_alpha(u: int, M: int) -> np.ndarray:
    k = np.arange(-M, M + 1)
    return SQRT_PI_2 * (2 * k + u)


def two_photon_param(alpha, r):
    return np.cosh(r) * alpha + np.sinh(r) * np.conj(alpha)


def gaussian_overlap(beta_k, beta_l):
    """Coherent-state overlap ``<beta_k|beta_l>``."""
    return np.exp(_overlap_exponent(beta_k, beta_l))


def _overlap_exponent(beta_k, beta_l):
    return -(np.abs(beta_k) ** 2 + np.abs(beta_l) ** 2) / 2 + np.conj(beta_k) * beta_l


@dataclass(frozen=True)
class CodewordSpec:
    """Logical codeword ``u`` as coefficients over the squeezed-coherent grid."""

    u: int
    M: int
    r: float
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.u not in (0, 1):
            raise ValueError(f"logical label must be 0 or 1, got {self.u}")
        if self.M < 0:
            raise ValueError("M must be non-negative")
        if not (math.isfinite(self.r) and self.r >= 0):
            raise ValueError(f"squeezing must be finite and >= 0, got {self.r}")
        c = np.asarray(self.coeffs, dtype=complex).copy()
        if c.shape != (2 * self.M + 1,):
            raise ValueError(f"expected {2 * self.M + 1} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        if not np.any(np.abs(c) > 0):
            raise DegenerateCodeError("all coefficients are zero")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def alpha(self) -> np.ndarray:
        return grid_alpha(self.u, self.M)

    @property
    def beta(self) -> np.ndarray:
        return two_photon_param(self.alpha, self.r)

    def with_coeffs(self, coeffs) -> "CodewordSpec":
        return CodewordSpec(self.u, self.M, self.r, coeffs)


def _check_same_r(bra: CodewordSpec, ket: CodewordSpec):
    if bra.r != ket.r:
        raise ValueError(f"squeezing mismatch: {bra.r} != {ket.r}")


def gram_sum(code: CodewordSpec) -> complex:
    bk = code.beta
    G = gaussian_overlap(bk[:, None], bk[None, :])
    return complex(code.coeffs.conj() @ G @ code.coeffs)


def normalization(code: CodewordSpec) -> float:
    """``N(u)``, the norm of the unnormalized superposition."""
    s = gram_sum(code)
    if not (s.real > 0) or abs(s.imag) > 1e-10 * abs(s.real):
        raise DegenerateCodeError(f"invalid Gram sum {s}")
    return math.sqrt(s.real)


def kernel_matrix(u: int, v: int, M: int, r: float, op) -> np.ndarray:
    """Matrix ``K[k, l] = <alpha_k^(u), r| op |alpha_l^(v), r>`` over the two grids.

    Adjoint monomials come from the transposed conjugate of their partner.
    """
    op = Monomial(op)
    if not op.direct:
        return kernel_matrix(v, u, M, r, op.adjoint).conj().T
    bk = two_photon_param(grid_alpha(u, M), r)[:, None]
    bl = two_photon_param(grid_alpha(v, M), r)[None, :]
    lam, lam1 = math.cosh(r), math.sinh(r)
    G = KERNELS[op](np.conj(bk), bl, lam, lam1)
    return G * gaussian_overlap(bk, bl)


def matrix_element(bra: CodewordSpec, ket: CodewordSpec, op, normalized: bool = True) -> complex:
    _check_same_r(bra, ket)
    if bra.M != ket.M:
        return _matrix_element_ragged(bra, ket, Monomial(op), normalized)
    K = kernel_matrix(bra.u, ket.u, bra.M, bra.r, op)
    val = complex(bra.coeffs.conj() @ K @ ket.coeffs)
    if normalized:
        val /= normalization(bra) * normalization(ket)
    return val


def _matrix_element_ragged(bra, ket, op, normalized):
    if not op.direct:
        return _matrix_element_ragged(ket, bra, op.adjoint, normalized).conjugate()
    bk = bra.beta[:, None]
    bl = ket.beta[None, :]
    lam, lam1 = math.cosh(bra.r), math.sinh(bra.r)
    K = KERNELS[op](np.conj(bk), bl, lam, lam1) * gaussian_overlap(bk, bl)
    val = complex(bra.coeffs.conj() @ K @ ket.coeffs)
    if normalized:
        val /= normalization(bra) * normalization(ket)
    return val


def stabilizer_expectation_q(r: float) -> float:
    """``<u_L|S_q|u_L> = exp(-pi e^{-2r})``, independent of the coefficients."""
    return math.exp(-math.pi * math.exp(-2 * r))


def stabilizer_expectation_p(code: CodewordSpec) -> complex:
    b = code.beta
    bs = b + SQRT_2PI * math.exp(code.r)
    E = np.exp(-(np.abs(b[:, None]) ** 2 + np.abs(bs[None, :]) ** 2) / 2 + np.conj(b[:, None]) * bs[None, :])
    return complex(code.coeffs.conj() @ E @ code.coeffs) / normalization(code) ** 2


# -- exp-linear operators exp(mu a^dag - nu a) ------------------------------------


@dataclass(frozen=True)
class ExpLinearOp:
    """``exp(mu a^dag - nu a)``; unitary (a displacement) iff ``nu == conj(mu)``."""

    mu: complex
    nu: complex

    @classmethod
    def displacement(cls, alpha) -> "ExpLinearOp":
        return cls(complex(alpha), complex(np.conj(alpha)))

    def adjoint(self) -> "ExpLinearOp":
        return ExpLinearOp(-np.conj(self.nu), -np.conj(self.mu))

    def scaled(self, s: float) -> "ExpLinearOp":
        return ExpLinearOp(self.mu * s, self.nu * s)


def compose_exp_linear(x: ExpLinearOp, y: ExpLinearOp) -> tuple[ExpLinearOp, complex]:
    """``exp(X) exp(Y) = prefactor * exp(X + Y)`` for linear generators."""
    pref = np.exp((x.mu * y.nu - x.nu * y.mu) / 2)
    return ExpLinearOp(x.mu + y.mu, x.nu + y.nu), complex(pref)


def exp_linear_kernel(op: ExpLinearOp, beta_k, beta_l, r: float) -> np.ndarray:
    """``E[k, l] = <beta_k| exp(mu a^dag - nu a) |beta_l>`` for squeezed coherent states.

    In the squeezed frame the generator keeps its exp-linear form with
    ``mu' = mu cosh r + nu sinh r`` and ``nu' = nu cosh r + mu sinh r``.
    """
    lam, lam1 = math.cosh(r), math.sinh(r)
    mu = op.mu * lam + op.nu * lam1
    nu = op.nu * lam + op.mu * lam1
    bk = np.asarray(beta_k)[:, None]
    bl = np.asarray(beta_l)[None, :]
    return np.exp(_overlap_exponent(bk, bl) + mu * np.conj(bk) - nu * bl - mu * nu / 2)


def exp_linear_matrix(op: ExpLinearOp, u: int, v: int, M: int, r: float) -> np.ndarray:
    """``E[k, l] = <alpha_k^(u), r| exp(mu a^dag - nu a) |alpha_l^(v), r>``."""
    return exp_linear_kernel(op, two_photon_param(grid_alpha(u, M), r), two_photon_param(grid_alpha(v, M), r), r)


def exp_linear_expectation(op: ExpLinearOp, bra: CodewordSpec, ket: CodewordSpec) -> complex:
    _check_same_r(bra, ket)
    E = exp_linear_kernel(op, bra.beta, ket.beta, bra.r)
    val = complex(bra.coeffs.conj() @ E @ ket.coeffs)
    return val / (normalization(bra) * normalization(ket))


@dataclass(frozen=True)
class FMatrix:
    """Generalized-stabilizer coefficients with ``f11 f22 - f12 f21 = 1``."""

    f11: complex
    f12: complex
    f21: complex
    f22: complex

    def __post_init__(self):
        det = self.f11 * self.f22 - self.f12 * self.f21
        if abs(det - 1) > 1e-12:
            raise ValueError(f"f matrix must have unit determinant, got {det}")

    @classmethod
    def identity(cls) -> "FMatrix":
        return cls(1 + 0j, 0j, 0j, 1 + 0j)

    @classmethod
    def from_free(cls, f11, f12, f21) -> "FMatrix":
        f11, f12, f21 = complex(f11), complex(f12), complex(f21)
        if abs(f11) < 1e-6:
            raise ValueError("|f11| too small to derive f22")
        return cls(f11, f12, f21, (1 + f12 * f21) / f11)

    @classmethod
    def from_printed(cls, f11, f12, f21, f22) -> "FMatrix":
        """Build from rounded published entries, re-deriving f22 so det == 1 exactly.

        Rounded tables only satisfy the determinant to ~1e-6.
        """
        f22_exact = (1 + complex(f12) * complex(f21)) / complex(f11)
        if abs(f22_exact - complex(f22)) > 1e-4:
            raise ValueError("printed entries are inconsistent with unit determinant")
        return cls(complex(f11), complex(f12), complex(f21), f22_exact)

    def as_array(self) -> np.ndarray:
        return np.array([[self.f11, self.f12], [self.f21, self.f22]])


def stabilizer_ops_from_f(f: FMatrix) -> tuple[ExpLinearOp, ExpLinearOp]:
    """(S_q_ap, S_p_ap) as exp-linear operators.

    S_q_ap = exp[i 2 sqrt(pi) (f11 q + f12 p)],  S_p_ap = exp[-i 2 sqrt(pi) (f21 q + f22 p)]
    with q = (a + a^dag)/sqrt2, p = (a - a^dag)/(sqrt2 i).
    """
    sq = ExpLinearOp(SQRT_2PI * (1j * f.f11 - f.f12), SQRT_2PI * (-1j * f.f11 - f.f12))
    sp = ExpLinearOp(SQRT_2PI * (-1j * f.f21 + f.f22), SQRT_2PI * (1j * f.f21 + f.f22))
    return sq, sp


def stabilizer_terms(code: CodewordSpec, f: FMatrix) -> dict[str, complex]:
    """Expectations of S_q_ap, S_p_ap, S_q_ap^dag S_q_ap, S_p_ap^dag S_p_ap on one codeword."""
    sq, sp = stabilizer_ops_from_f(f)
    out = {}
    for name, op in (("Sq", sq), ("Sp", sp)):
        out[name] = exp_linear_expectation(op, code, code)
        combined, pref = compose_exp_linear(op.adjoint(), op)
        out[f"{name}^dag {name}"] = pref * exp_linear_expectation(combined, code, code)
    return out


@dataclass(frozen=True)
class PauliReport:
    z_diag: tuple[complex, complex]  # <u|sigma_z|u>
    x_offdiag: tuple[complex, complex]  # <0|sigma_x|1>, <1|sigma_x|0>
    z_norms: tuple[float, float]  # ||sigma_z |u>||
    x_norms: tuple[float, float]


def _norm_after(op: ExpLinearOp, code: CodewordSpec) -> float:
    combined, pref = compose_exp_linear(op.adjoint(), op)
    return math.sqrt(abs(pref * exp_linear_expectation(combined, code, code)))


def pauli_expectations(code0: CodewordSpec, code1: CodewordSpec, f: FMatrix) -> PauliReport:
    """Logical Paulis as half-powers of the generalized stabilizers."""
    _check_same_r(code0, code1)
    sq, sp = stabilizer_ops_from_f(f)
    sz, sx = sq.scaled(0.5), sp.scaled(0.5)
    return PauliReport(
        z_diag=(exp_linear_expectation(sz, code0, code0), exp_linear_expectation(sz, code1, code1)),
        x_offdiag=(exp_linear_expectation(sx, code0, code1), exp_linear_expectation(sx, code1, code0)),
        z_norms=(_norm_after(sz, code0), _norm_after(sz, code1)),
        x_norms=(_norm_after(sx, code0), _norm_after(sx, code1)),
    )
