"""Recovery channels for a logical code pair under loss and dephasing.

The error space is spanned by the first-order error kets ``A_i |u_L>``.  A
recovery is a set of Kraus maps ``R_r = sum_i x_ri B_i`` with
``B_(u, alpha) = |u_L><e_alpha|``; the optimal one comes from a semidefinite
program over ``X_ij = sum_r conj(x_ri) x_rj``.

Two noise models are supported:

``"exact"``
    the completely positive, trace-preserving loss + dephasing channel after
    one interval (the default);
``"first_order"``
    the three first-order Kraus operators themselves, which are not trace
    preserving at large photon number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sdp
from .fock import (
    BLOCH_LABELS,
    DEFAULT_NTRUNC,
    bloch_states,
    codeword_vector,
    codeword_vector_auto,
    loss_dephasing_exact,
)
from .loss import PairMoments
from .noise import KRAUS_INDICES, NoiseScale, pair_coefficient_table

NOISE_MODELS = ("exact", "first_order")
NULL_KET_TOL = 1e-10
TRACE_DRIFT_TOL = 1e-6


class TraceDriftError(RuntimeError):
    pass


class RankCollapseError(RuntimeError):
    def __init__(self, spectrum):
        super().__init__(f"error-ket Gram matrix is singular after filtering; spectrum {spectrum}")
        self.spectrum = spectrum


def _check_model(model):
    if model not in NOISE_MODELS:
        raise ValueError(f"unknown noise model {model!r}; expected one of {NOISE_MODELS}")


# -- noise channels on dense density matrices ---------------------------------


def first_order_apply(rho: np.ndarray, scale: NoiseScale) -> np.ndarray:
    """``sum_k A_k rho A_k^dag`` for the three first-order Kraus operators."""
    N = rho.shape[0]
    n = np.arange(N, dtype=float)
    d1 = 1 - 0.5 * scale.kappa_tau * n - 0.5 * scale.kappa_phi_tau * n**2
    out = d1[:, None] * rho * d1[None, :]
    sq = np.sqrt(n)
    out[:-1, :-1] += scale.kappa_tau * sq[1:, None] * rho[1:, 1:] * sq[None, 1:]
    out += scale.kappa_phi_tau * n[:, None] * rho * n[None, :]
    return out


def apply_noise(rho: np.ndarray, scale: NoiseScale, model: str = "exact") -> np.ndarray:
    _check_model(model)
    if model == "exact":
        return loss_dephasing_exact(rho, scale.kappa_tau, scale.kappa_phi_tau)
    return first_order_apply(rho, scale)


def _kraus_on_vector(k: int, vec: np.ndarray, scale: NoiseScale) -> np.ndarray:
    n = np.arange(len(vec), dtype=float)
    if k == 1:
        return (1 - 0.5 * scale.kappa_tau * n - 0.5 * scale.kappa_phi_tau * n**2) * vec
    if k == 2:
        out = np.zeros_like(vec)
        out[:-1] = math.sqrt(scale.kappa_tau) * np.sqrt(n[1:]) * vec[1:]
        return out
    return math.sqrt(scale.kappa_phi_tau) * n * vec


# -- error space ---------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorBasis:
    """Orthonormal error kets ``e_alpha`` and the data needed to rebuild them.

    ``kets[:, alpha] = sum_j coeffs[j, alpha] * raw[:, j]`` where the raw kets
    are ``A_i |u_L>`` labelled by ``labels[j] = (i, u)``.
    """

    codes: tuple
    scale: NoiseScale
    code_vectors: np.ndarray  # (N, 2) normalized codewords
    logical_gram: np.ndarray  # (2, 2) exact <u|v>
    labels: tuple
    raw: np.ndarray  # (N, len(labels))
    coeffs: np.ndarray  # (len(labels), n_err)
    kets: np.ndarray  # (N, n_err)
    gram_log: np.ndarray  # Gram matrix of the kept raw kets, closed form
    moments: PairMoments = field(repr=False)

    @property
    def n_err(self) -> int:
        return self.kets.shape[1]

    @property
    def n_trunc(self) -> int:
        return self.kets.shape[0]

    @property
    def size(self) -> int:
        """Number of B operators, i.e. the SDP matrix dimension."""
        return 2 * self.n_err


def _pair_gram(moments: PairMoments, scale: NoiseScale) -> np.ndarray:
    """``G[(i,u), (j,v)] = <u| A_i^dag A_j |v>`` in closed form, labels ordered (i, u)."""
    _, P = pair_coefficient_table([scale])
    vals = moments.values  # [u, v, m]
    G = np.einsum("ijm,uvm->iujv", P[0], vals)
    return G.reshape(6, 6)


ALL_LABELS = tuple((i, u) for i in KRAUS_INDICES for u in (0, 1))


def build_error_basis(codes, scale: NoiseScale, n_trunc: int = DEFAULT_NTRUNC, auto_trunc: bool = True) -> ErrorBasis:
    code0, code1 = codes
    if auto_trunc:
        v0 = codeword_vector_auto(code0, n_trunc)
        v1 = codeword_vector_auto(code1, len(v0))
        if len(v1) != len(v0):
            v0 = codeword_vector(code0, len(v1))
    else:
        v0, v1 = codeword_vector(code0, n_trunc), codeword_vector(code1, n_trunc)
    V = np.stack([v0, v1], axis=1)
    moments = PairMoments.of(code0, code1)
    g = moments.values[:, :, 0]  # identity monomial
    G = _pair_gram(moments, scale)
    norms = np.sqrt(np.clip(np.diag(G).real, 0, None))
    keep = [j for j in range(6) if norms[j] >= NULL_KET_TOL]
    labels = tuple(ALL_LABELS[j] for j in keep)
    Gk = G[np.ix_(keep, keep)]
    Gk = (Gk + Gk.conj().T) / 2
    w, U = np.linalg.eigh(Gk)
    if w.min() <= 1e-14 * w.max():
        raise RankCollapseError(w)
    C = U @ np.diag(w**-0.5) @ U.conj().T  # Loewdin: G^{-1/2}
    raw = np.stack([_kraus_on_vector(i, V[:, u], scale) for i, u in labels], axis=1)
    kets = raw @ C
    # n^2-weighted kets feel the truncation more than the codewords do; one more
    # Loewdin pass in the truncated space keeps the recovery exactly trace preserving there
    wn, Un = np.linalg.eigh(kets.conj().T @ kets)
    C = C @ (Un @ np.diag(wn**-0.5) @ Un.conj().T)
    kets = raw @ C
    return ErrorBasis(
        codes=(code0, code1),
        scale=scale,
        code_vectors=V,
        logical_gram=g,
        labels=labels,
        raw=raw,
        coeffs=C,
        kets=kets,
        gram_log=Gk,
        moments=moments,
    )


# -- W matrix -------------------------------------------------------------------------


def w_matrix(basis: ErrorBasis, model: str = "exact") -> np.ndarray:
    """``W[(u,a), (v,b)] = <e_a| N(|u_L><v_L|) |e_b>`` from dense Fock products."""
    _check_model(model)
    ne = basis.n_err
    W = np.empty((2 * ne, 2 * ne), complex)
    V, E = basis.code_vectors, basis.kets
    for u in (0, 1):
        for v in (0, 1):
            out = apply_noise(np.outer(V[:, u], V[:, v].conj()), basis.scale, model)
            W[u * ne : (u + 1) * ne, v * ne : (v + 1) * ne] = E.conj().T @ out @ E
    return (W + W.conj().T) / 2


def w_matrix_analytic(basis: ErrorBasis) -> np.ndarray:
    """First-order W without Fock vectors: ``T[(u,a), k] = <e_a|A_k|u_L>`` from moment sums."""
    G = _pair_gram(basis.moments, basis.scale).reshape(3, 2, 3, 2)  # [i, v, k, u]
    # <raw_(i,v)| A_k |u> = <v| A_i^dag A_k |u>
    rows = np.array([G[i - 1, v] for (i, v) in basis.labels])  # [j, k, u]
    T = np.einsum("ja,jku->uak", basis.coeffs.conj(), rows)  # [u, a, k]
    T = T.reshape(2 * basis.n_err, 3)
    return T @ T.conj().T


# -- semidefinite program ---------------------------------------------------------------


@dataclass(frozen=True)
class SDPSolution:
    X: np.ndarray
    fidelity: float
    kkt_residual: float
    gap: float
    constraint_residual: float
    iterations: int
    converged: bool


def _constraint_ops(basis: ErrorBasis):
    """Constraint ``sum_uv g_uv X[(u,a),(v,b)] = delta_ab`` in standard form."""
    herm = sdp.hermitian_basis(basis.n_err)
    gc = basis.logical_gram.conj()
    A = np.array([np.kron(gc, E) for E in herm])
    b = np.array([np.trace(E).real for E in herm])
    return A, b


def span_map(X: np.ndarray, basis: ErrorBasis) -> np.ndarray:
    ne, g = basis.n_err, basis.logical_gram
    return sum(g[u, v] * X[u * ne : (u + 1) * ne, v * ne : (v + 1) * ne] for u in (0, 1) for v in (0, 1))


def sdp_solve(W: np.ndarray, basis: ErrorBasis, tol: float = 1e-10, max_iter: int = 200) -> SDPSolution:
    """Maximize ``Tr(XW)/4`` subject to X >= 0 and trace preservation on the error span."""
    if W.shape != (basis.size, basis.size):
        raise ValueError(f"W has shape {W.shape}, basis needs {basis.size}")
    if np.abs(W - W.conj().T).max() > 1e-10 * max(1.0, np.abs(W).max()):
        raise ValueError("W is not Hermitian")
    A, b = _constraint_ops(basis)
    g = basis.logical_gram
    X0 = np.kron(np.eye(2), np.eye(basis.n_err)) / np.trace(g).real
    res = sdp.solve(-W / 4, A, b, tol=tol, max_iter=max_iter, X0=X0)
    X = res.X
    resid = float(np.abs(span_map(X, basis) - np.eye(basis.n_err)).max())
    return SDPSolution(
        X=X,
        fidelity=float(np.trace(X @ W).real / 4),
        kkt_residual=res.kkt_residual,
        gap=abs(res.gap),
        constraint_residual=resid,
        iterations=res.iterations,
        converged=res.converged,
    )


# -- recovery channels ------------------------------------------------------------------


@dataclass(frozen=True)
class RecoveryChannel:
    """Kraus maps ``R_r = V @ factors[r]^dag`` into the code span, plus a completion.

    ``V`` holds the two codeword vectors.  Every ``factors[r]`` column lies in
    the error span ``E``, so ``sum R^dag R = E S E^dag`` and the completion
    ``R_0 = sqrt(I - sum R^dag R)`` has the closed form
    ``(I - E E^dag) + E sqrt(I - S) E^dag``.
    """

    V: np.ndarray
    factors: tuple
    span: np.ndarray
    completion: bool = True

    @property
    def n_trunc(self) -> int:
        return self.V.shape[0]

    def span_gram(self) -> np.ndarray:
        g = self.V.conj().T @ self.V
        E = self.span
        S = sum(E.conj().T @ F @ g @ F.conj().T @ E for F in self.factors)
        return (S + S.conj().T) / 2

    def _completion_inner(self) -> np.ndarray:
        w, U = np.linalg.eigh(np.eye(self.span.shape[1]) - self.span_gram())
        return U @ np.diag(np.sqrt(np.clip(w, 0, None))) @ U.conj().T

    def kraus_matrices(self) -> list[np.ndarray]:
        out = [self.V @ F.conj().T for F in self.factors]
        if self.completion:
            E = self.span
            out.append(np.eye(self.n_trunc) - E @ E.conj().T + E @ self._completion_inner() @ E.conj().T)
        return out

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho, dtype=complex)
        for F in self.factors:
            out += self.V @ (F.conj().T @ rho @ F) @ self.V.conj().T
        if self.completion:
            E = self.span
            Ed = E.conj().T
            K = self._completion_inner()
            # R0 = I + E (K - I) E^dag
            D = E @ (K - np.eye(E.shape[1]))
            Ro = rho + D @ (Ed @ rho)  # R0 rho
            out += Ro + (Ro @ E) @ D.conj().T
        return out

    def tp_defect(self) -> float:
        """Largest eigenvalue excess of ``sum R^dag R`` over the identity on the span."""
        S = self.span_gram()
        return float(np.linalg.eigvalsh(S).max() - 1)


def recovery_from_solution(sol: SDPSolution, basis: ErrorBasis, floor: float = 1e-12) -> RecoveryChannel:
    w, U = np.linalg.eigh(sol.X)
    if w.min() < -1e-9:
        raise ValueError(f"X has eigenvalue {w.min():.3e} below the PSD floor")
    ne = basis.n_err
    factors = []
    for r in range(len(w)):
        if w[r] < floor:
            continue
        x = math.sqrt(w[r]) * U[:, r].conj()  # x_(u,a)
        # R = sum_(u,a) x_(u,a) |u><e_a| = V @ F^dag with F[:, u] = sum_a conj(x_(u,a)) e_a
        F = np.stack([basis.kets @ x[u * ne : (u + 1) * ne].conj() for u in (0, 1)], axis=1)
        factors.append(F)
    return RecoveryChannel(basis.code_vectors, tuple(factors), basis.kets)


def transpose_recovery(basis: ErrorBasis, floor: float = 1e-12) -> RecoveryChannel:
    """Transpose-style recovery built from the logical-averaged error Gram matrix.

    ``T_ij = (<0|A_i^dag A_j|0> + <1|A_i^dag A_j|1>)/2 = U Lam U^dag``, then
    ``R_i = P_C F_i^dag / sqrt(Lam_i)`` with ``F_i = sum_k U_ki A_k``.  If the
    resulting set overshoots trace preservation it is scaled down uniformly.
    """
    G = _pair_gram(basis.moments, basis.scale).reshape(3, 2, 3, 2)
    T = (G[:, 0, :, 0] + G[:, 1, :, 1]) / 2
    T = (T + T.conj().T) / 2
    lam, U = np.linalg.eigh(T)
    V = basis.code_vectors
    gi = np.linalg.inv(basis.logical_gram)
    # A_k |u> for all k, u (zero-rate operators give zero columns)
    AkV = np.stack([np.stack([_kraus_on_vector(k, V[:, u], basis.scale) for u in (0, 1)], axis=1) for k in KRAUS_INDICES])
    factors = []
    for i in range(3):
        if lam[i] < floor:
            continue
        FiV = sum(U[k, i] * AkV[k] for k in range(3))  # F_i V, shape (N, 2)
        # R_i = V g^-1 V^dag F_i^dag / sqrt(lam) = V (F_i V g^-1 / sqrt(lam))^dag
        factors.append(FiV @ gi.conj().T / math.sqrt(lam[i]))
    chan = RecoveryChannel(V, tuple(factors), basis.kets)
    excess = chan.tp_defect()
    if excess > 0:
        s = 1 / math.sqrt(1 + excess)
        chan = RecoveryChannel(V, tuple(F * s for F in factors), basis.kets)
    return chan


# -- fidelities --------------------------------------------------------------------------


def _noisy_blocks(basis: ErrorBasis, model: str):
    V = basis.code_vectors
    return {(u, v): apply_noise(np.outer(V[:, u], V[:, v].conj()), basis.scale, model) for u in (0, 1) for v in (0, 1)}


def entanglement_fidelity(channel: RecoveryChannel, basis: ErrorBasis, model: str = "exact", blocks=None) -> float:
    """``(1/4) sum_r |Tr(R_r A_k)|^2`` summed over the noise, without the completion.

    With ``R_r = V F_r^dag`` this is ``(1/4) sum_r sum_uv F_r[:,u]^dag N(|u><v|) F_r[:,v]``.
    """
    blocks = _noisy_blocks(basis, model) if blocks is None else blocks
    total = 0.0
    for F in channel.factors:
        for u in (0, 1):
            for v in (0, 1):
                total += (F[:, u].conj() @ blocks[u, v] @ F[:, v]).real
    return float(total / 4)


def full_entanglement_fidelity(channel: RecoveryChannel, basis: ErrorBasis, model: str = "exact", blocks=None) -> float:
    """Entanglement fidelity of the complete channel, completion Kraus operator included."""
    blocks = _noisy_blocks(basis, model) if blocks is None else blocks
    V = basis.code_vectors
    return float(sum((V[:, u].conj() @ channel.apply(blocks[u, v]) @ V[:, v]).real for u in (0, 1) for v in (0, 1)) / 4)


def state_fidelities(channel: RecoveryChannel, basis: ErrorBasis, model: str = "exact") -> dict[str, float]:
    """``<psi| R(N(psi)) |psi>`` for the six logical Bloch states."""
    V = basis.code_vectors
    out = {}
    for label, psi in zip(BLOCH_LABELS, bloch_states(V[:, 0], V[:, 1])):
        rho = channel.apply(apply_noise(np.outer(psi, psi.conj()), basis.scale, model))
        out[label] = float(np.vdot(psi, rho @ psi).real)
    return out


@dataclass(frozen=True)
class RecoveryResult:
    basis: ErrorBasis
    W: np.ndarray
    solution: SDPSolution
    channel: RecoveryChannel
    state_fidelity: dict
    transpose_fidelity: float
    model: str


def optimal_recovery(codes, scale: NoiseScale, model: str = "exact", n_trunc: int = DEFAULT_NTRUNC) -> RecoveryResult:
    basis = build_error_basis(codes, scale, n_trunc)
    W = w_matrix(basis, model)
    sol = sdp_solve(W, basis)
    chan = recovery_from_solution(sol, basis)
    blocks = _noisy_blocks(basis, model)
    tf = entanglement_fidelity(transpose_recovery(basis), basis, model, blocks)
    return RecoveryResult(basis, W, sol, chan, state_fidelities(chan, basis, model), tf, model)


# -- repeated cycles ----------------------------------------------------------------------


@dataclass(frozen=True)
class TracePoint:
    cycle: int
    time: float  # in units of tau; noise points sit half a step early so saw-tooth plots separate the phases
    state_label: str
    fidelity: float
    phase: str  # "noise" or "recovery"


def multi_cycle(rho0: np.ndarray, recovery: RecoveryChannel, scale: NoiseScale, cycles: int, model: str = "exact", label: str = "", noise=None) -> list[TracePoint]:
    """Alternate noise and recovery ``cycles`` times, recording the fidelity to ``rho0``.

    ``noise`` overrides the noise map (any callable on density matrices).
    """
    if cycles < 0:
        raise ValueError("cycles must be non-negative")
    noise = (lambda r: apply_noise(r, scale, model)) if noise is None else noise
    # rho0 pure -> fidelity is <psi|rho|psi>; otherwise fall back to Tr(rho0 rho)
    w, U = np.linalg.eigh(rho0)
    pure = w[-1] > 1 - 1e-12
    psi = U[:, -1] if pure else None

    def fid(rho):
        return float(np.vdot(psi, rho @ psi).real) if pure else float(np.trace(rho0 @ rho).real)

    rho = rho0.astype(complex)
    tr = np.trace(rho).real
    out = []
    for c in range(1, cycles + 1):
        for phase, step in (("noise", noise), ("recovery", recovery.apply)):
            rho = step(rho)
            new_tr = np.trace(rho).real
            if abs(new_tr - tr) > TRACE_DRIFT_TOL:
                raise TraceDriftError(f"trace moved by {new_tr - tr:.3e} in the {phase} step of cycle {c}")
            out.append(TracePoint(c, float(c) if phase == "recovery" else c - 0.5, label, fid(rho), phase))
    return out


def mean_fidelity_sweep(codes, scales, cycles, model: str = "exact", n_trunc: int = DEFAULT_NTRUNC) -> list[dict]:
    """Mean six-state fidelity after each requested cycle count, for each scale."""
    cycles = sorted(set(int(c) for c in cycles))
    rows = []
    for scale in scales:
        res = optimal_recovery(codes, scale, model, n_trunc)
        V = res.basis.code_vectors
        totals = {c: 0.0 for c in cycles}
        cmax = max(cycles) if cycles else 0
        for label, psi in zip(BLOCH_LABELS, bloch_states(V[:, 0], V[:, 1])):
            rho0 = np.outer(psi, psi.conj())
            if 0 in totals:
                totals[0] += 1.0
            trace = [p for p in multi_cycle(rho0, res.channel, scale, cmax, model, label) if p.phase == "recovery"]
            for p in trace:
                if p.cycle in totals:
                    totals[p.cycle] += p.fidelity
        for c in cycles:
            rows.append({"kappa_tau": scale.kappa_tau, "kappa_phi_tau": scale.kappa_phi_tau, "cycles": c, "mean_fidelity": totals[c] / 6})
    return rows


__all__ = [
    "ErrorBasis",
    "RecoveryChannel",
    "RecoveryResult",
    "SDPSolution",
    "TracePoint",
    "TraceDriftError",
    "apply_noise",
    "build_error_basis",
    "entanglement_fidelity",
    "full_entanglement_fidelity",
    "mean_fidelity_sweep",
    "multi_cycle",
    "optimal_recovery",
    "recovery_from_solution",
    "sdp_solve",
    "state_fidelities",
    "transpose_recovery",
    "w_matrix",
    "w_matrix_analytic",
]
