"""Truncated Fock-space numerics.

Used as the independent oracle for the closed-form algebra, and for channel
simulations (Lindblad evolution, exact dephasing, recovery cycles).  Displacement
and squeezing are built as dense matrix exponentials of truncated generators on
purpose: this path shares nothing with the closed-form kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm
from scipy.sparse import diags
from scipy.sparse.linalg import expm_multiply

from .algebra import CodewordSpec
from .monomials import Monomial

DEFAULT_NTRUNC = 300
TAIL_WINDOW = 10
TAIL_TOL = 1e-10


class TruncationError(RuntimeError):
    def __init__(self, tail, n_trunc):
        super().__init__(f"truncation {n_trunc} inadequate: tail mass {tail:.3e}")
        self.tail = tail
        self.n_trunc = n_trunc


@lru_cache(maxsize=8)
def destroy(n_trunc: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, n_trunc, dtype=float)), 1).astype(complex)
    a.setflags(write=False)
    return a


def number(n_trunc: int) -> np.ndarray:
    return np.diag(np.arange(n_trunc, dtype=float)).astype(complex)


def monomial_matrix(op, n_trunc: int) -> np.ndarray:
    a = destroy(n_trunc)
    ad = a.conj().T
    n = np.arange(n_trunc, dtype=float)
    nd = np.diag(n).astype(complex)
    table = {
        Monomial.I: lambda: np.eye(n_trunc, dtype=complex),
        Monomial.A: lambda: a.copy(),
        Monomial.A_DAG: lambda: ad.copy(),
        Monomial.N: lambda: nd,
        Monomial.N2: lambda: np.diag(n**2).astype(complex),
        Monomial.N3: lambda: np.diag(n**3).astype(complex),
        Monomial.N4: lambda: np.diag(n**4).astype(complex),
        Monomial.N_A: lambda: ad @ a @ a,
        Monomial.A_DAG_N: lambda: ad @ ad @ a,
        Monomial.N2_A: lambda: nd @ nd @ a,
        Monomial.A_DAG_N2: lambda: ad @ nd @ nd,
    }
    return table[Monomial(op)]()


def tail_mass(vec: np.ndarray) -> float:
    return float(np.sum(np.abs(vec[-TAIL_WINDOW:]) ** 2))


@lru_cache(maxsize=16)
def _squeezed_vacuum(r: float, n_trunc: int) -> np.ndarray:
    a = destroy(n_trunc)
    ad = a.conj().T
    vac = np.zeros(n_trunc, dtype=complex)
    vac[0] = 1
    out = expm(0.5 * r * (a @ a - ad @ ad)) @ vac
    out.setflags(write=False)
    return out


def displacement(alpha, n_trunc: int) -> np.ndarray:
    a = destroy(n_trunc)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def _displacement_generator(alpha, n_trunc: int):
    sq = np.sqrt(np.arange(1, n_trunc))
    return diags([-np.conj(alpha) * sq, alpha * sq], [1, -1], format="csr", dtype=complex)


def squeezed_coherent_fock(alpha, r: float, n_trunc: int = DEFAULT_NTRUNC, check: bool = True) -> np.ndarray:
    """``D(alpha) S(r) |0>`` in a truncated Fock basis.

    The displacement is applied as the action of the exponential of the sparse
    truncated generator on the squeezed vacuum.
    """
    vec = expm_multiply(_displacement_generator(alpha, n_trunc), _squeezed_vacuum(float(r), n_trunc))
    if check:
        tail = tail_mass(vec)
        if tail > TAIL_TOL:
            raise TruncationError(tail, n_trunc)
    return vec


def codeword_vector(code: CodewordSpec, n_trunc: int = DEFAULT_NTRUNC, normalize: bool = True) -> np.ndarray:
    """Fock amplitudes of the codeword; normalized unless asked otherwise."""
    # components whose weight cannot reach 1e-17 are skipped: their own tails
    # would fail the check even though they do not contribute
    total = np.zeros(n_trunc, dtype=complex)
    cmax = np.max(np.abs(code.coeffs))
    for c, alpha in zip(code.coeffs, code.alpha):
        if abs(c) < 1e-17 * cmax:
            continue
        total += c * squeezed_coherent_fock(alpha, code.r, n_trunc, check=False)
    tail = tail_mass(total) / max(np.vdot(total, total).real, 1e-300)
    if tail > TAIL_TOL:
        raise TruncationError(tail, n_trunc)
    if normalize:
        total /= math.sqrt(np.vdot(total, total).real)
    return total


def codeword_vector_auto(code: CodewordSpec, n_trunc: int = DEFAULT_NTRUNC, max_trunc: int = 1200) -> np.ndarray:
    """As ``codeword_vector`` but grows the truncation by 1.5x until the tail check passes."""
    n = n_trunc
    while True:
        try:
            return codeword_vector(code, n)
        except TruncationError:
            if n >= max_trunc:
                raise
            n = min(int(n * 1.5), max_trunc)


# -- channels -----------------------------------------------------------------


def _band_index(n_trunc):
    n = np.arange(n_trunc)
    return n[:, None] - n[None, :]


def dephasing_exact(rho: np.ndarray, kappa_phi_t: float) -> np.ndarray:
    """Pure dephasing after dimensionless time ``kappa_phi * t``."""
    d = _band_index(rho.shape[0])
    return rho * np.exp(-0.5 * kappa_phi_t * d**2)


def _lindblad_rhs(rho, kappa, kappa_phi, sq, n, d2):
    # kappa/2 D[a] + kappa_phi/2 D[n] with D[x] = 2 x rho x^dag - x^dag x rho - rho x^dag x;
    # a rho a^dag is a diagonal shift, so everything is elementwise
    out = np.zeros_like(rho)
    out[:-1, :-1] = kappa * sq[1:, None] * sq[None, 1:] * rho[1:, 1:]
    out -= 0.5 * kappa * (n[:, None] + n[None, :]) * rho
    out -= 0.5 * kappa_phi * d2 * rho
    return out


def lindblad_evolve(rho: np.ndarray, kappa: float, kappa_phi: float, t: float, dt: float | None = None) -> np.ndarray:
    """RK4 integration of loss + dephasing from 0 to ``t``."""
    if t == 0 or (kappa == 0 and kappa_phi == 0):
        return rho.copy()
    N = rho.shape[0]
    n = np.arange(N, dtype=float)
    sq = np.sqrt(n)
    d2 = _band_index(N).astype(float) ** 2
    # explicit RK4 is stable for |lambda| dt < 2.78; the stiffest mode is the widest coherence band
    stiff = kappa * (N - 1) + 0.5 * kappa_phi * (N - 1) ** 2
    if dt is None:
        dt = min(1e-3 / (kappa + kappa_phi + 1), t / 100)
        dt = min(dt, 1.0 / max(stiff, 1e-300))
    steps = max(1, math.ceil(t / dt - 1e-9))
    h = t / steps
    tr0 = np.trace(rho).real
    y = rho.astype(complex, copy=True)
    for _ in range(steps):
        k1 = _lindblad_rhs(y, kappa, kappa_phi, sq, n, d2)
        k2 = _lindblad_rhs(y + 0.5 * h * k1, kappa, kappa_phi, sq, n, d2)
        k3 = _lindblad_rhs(y + 0.5 * h * k2, kappa, kappa_phi, sq, n, d2)
        k4 = _lindblad_rhs(y + h * k3, kappa, kappa_phi, sq, n, d2)
        y += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    # the generator conserves trace exactly on the truncated space, so any drift is integration error
    drift = abs(np.trace(y).real - tr0)
    if drift > 1e-6:
        raise RuntimeError(f"trace drift {drift:.2e}; reduce dt")
    return y


def amplitude_damping_exact(rho: np.ndarray, kappa_t: float) -> np.ndarray:
    """Exact single-photon loss channel ``exp(kappa t D[a]/2)`` in the Fock basis."""
    N = rho.shape[0]
    eta = math.exp(-kappa_t)
    out = np.zeros_like(rho, dtype=complex)
    n = np.arange(N)
    half = eta ** (n / 2)
    # rho'_{nm} = sum_l sqrt(C(n+l,l) C(m+l,l)) (1-eta)^l eta^{(n+m)/2} rho_{n+l,m+l}
    logfact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, N)))))
    for l in range(N):
        if l > 0 and (1 - eta) ** l < 1e-300:
            break
        idx = n[: N - l]
        lc = 0.5 * (logfact[idx + l] - logfact[idx] - logfact[l])
        w = np.exp(lc) * half[: N - l] * (1 - eta) ** (l / 2)
        out[: N - l, : N - l] += w[:, None] * w[None, :] * rho[l:, l:]
    return out


def loss_dephasing_exact(rho: np.ndarray, kappa_t: float, kappa_phi_t: float) -> np.ndarray:
    """Exact loss + dephasing channel; the two generators commute in the Fock basis."""
    return dephasing_exact(amplitude_damping_exact(rho, kappa_t), kappa_phi_t)


def kraus_apply(kraus, rho):
    return sum(K @ rho @ K.conj().T for K in kraus)


def first_order_kraus(kappa_tau: float, kappa_phi_tau: float, n_trunc: int) -> list[np.ndarray]:
    n = np.arange(n_trunc, dtype=float)
    A1 = np.diag(1 - 0.5 * kappa_tau * n - 0.5 * kappa_phi_tau * n**2).astype(complex)
    return [A1, math.sqrt(kappa_tau) * destroy(n_trunc), math.sqrt(kappa_phi_tau) * np.diag(n).astype(complex)]


# -- Bloch states and fidelities ---------------------------------------------------

BLOCH_LABELS = ("0", "1", "+", "-", "+i", "-i")
_S = 1 / math.sqrt(2)
BLOCH_AMPLITUDES = ((1, 0), (0, 1), (_S, _S), (_S, -_S), (_S, 1j * _S), (_S, -1j * _S))


def bloch_states(v0: np.ndarray, v1: np.ndarray) -> list[np.ndarray]:
    """Six normalized logical Pauli eigenstates; normalized with the exact Gram matrix."""
    out = []
    for a, b in BLOCH_AMPLITUDES:
        psi = a * v0 + b * v1
        out.append(psi / math.sqrt(np.vdot(psi, psi).real))
    return out


def average_codespace_fidelity(v0: np.ndarray, v1: np.ndarray, channel) -> float:
    """Mean of ``Tr[rho_i channel(rho_i)]`` over the six Bloch states."""
    total = 0.0
    for psi in bloch_states(v0, v1):
        rho = np.outer(psi, psi.conj())
        total += np.vdot(psi, channel(rho) @ psi).real
    return total / 6


# -- Wigner function --------------------------------------------------------------


@dataclass(frozen=True)
class WignerGrid:
    q: np.ndarray
    p: np.ndarray
    values: np.ndarray  # values[i, j] = W(q[i], p[j])
    outside_mass: float = 0.0  # quadrature probability falling outside the window

    def integral(self) -> float:
        dq = self.q[1] - self.q[0] if len(self.q) > 1 else 1.0
        dp = self.p[1] - self.p[0] if len(self.p) > 1 else 1.0
        return float(self.values.sum() * dq * dp)

    def q_marginal(self) -> np.ndarray:
        dp = self.p[1] - self.p[0]
        return self.values.sum(axis=1) * dp

    def p_marginal(self) -> np.ndarray:
        dq = self.q[1] - self.q[0]
        return self.values.sum(axis=0) * dq


def _quadrature_bases(N):
    a = destroy(N)
    ad = a.conj().T
    wq, Vq = np.linalg.eigh((ad + a) / math.sqrt(2))
    wp, Vp = np.linalg.eigh((a - ad) / (1j * math.sqrt(2)))
    return wq, Vq, wp, Vp


def _outside(rho, w, V, lo, hi) -> float:
    probs = np.real(np.einsum("ki,kl,li->i", V.conj(), rho, V))
    return float(probs[(w < lo) | (w > hi)].sum())


def wigner_grid(state: np.ndarray, q, p) -> WignerGrid:
    """``W(q, p) = (1/pi) Tr[rho D(alpha) Pi D(alpha)^dag]`` with ``alpha = (q + ip)/sqrt2``.

    Normalized so that the integral over dq dp is one.  ``state`` is a Fock
    vector or a density matrix.  The generators are diagonalized once; the
    truncated position eigenbasis doubles as a Gauss-Hermite quadrature for
    the probability that lies outside the window.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    pure = state.ndim == 1
    rho = np.outer(state, state.conj()) if pure else np.asarray(state)
    N = rho.shape[0]
    parity = (-1.0) ** np.arange(N)
    wq, Vq, wp, Vp = _quadrature_bases(N)
    # D(-alpha) = e^{i q0 P} e^{-i p0 Q} up to a phase that cancels in the parity trace
    Eq = np.exp(1j * np.outer(wp, q))
    W = np.empty((len(q), len(p)))
    for j, p0 in enumerate(p):
        Uq = (Vq * np.exp(-1j * p0 * wq)) @ Vq.conj().T
        if pure:
            z = Vp.conj().T @ (Uq @ state)
            Y = Vp @ (Eq * z[:, None])  # column i holds D(-alpha_i) psi
            W[:, j] = (parity @ np.abs(Y) ** 2) / math.pi
        else:
            r = Uq @ rho @ Uq.conj().T
            for i in range(len(q)):
                U = (Vp * Eq[:, i]) @ Vp.conj().T
                W[i, j] = np.real(np.sum(parity * np.einsum("ij,jk,ik->i", U, r, U.conj()))) / math.pi
    outside = _outside(rho, wq, Vq, q.min(), q.max()) + _outside(rho, wp, Vp, p.min(), p.max())
    return WignerGrid(q, p, W, outside)
