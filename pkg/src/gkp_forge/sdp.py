"""Small dense semidefinite programs over Hermitian matrices.

Standard form, with ``<A, X> = Re Tr(A^dag X)``::

    minimize    <C, X>
    subject to  <A_i, X> = b_i,   X >= 0

solved by an infeasible-start primal-dual path-following method using the
HKM search direction and Mehrotra's predictor-corrector.  Intended for
problems with a few dozen rows and constraints; everything is dense.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SDPError(RuntimeError):
    pass


@dataclass(frozen=True)
class SDPResult:
    X: np.ndarray
    y: np.ndarray
    Z: np.ndarray
    primal_objective: float
    dual_objective: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    converged: bool

    @property
    def kkt_residual(self) -> float:
        return max(self.primal_residual, self.dual_residual, abs(self.gap))


def hermitian_basis(n: int) -> list[np.ndarray]:
    """Orthonormal real basis of n x n Hermitian matrices (n^2 elements)."""
    out = []
    s = 1 / math.sqrt(2)
    for j in range(n):
        E = np.zeros((n, n), complex)
        E[j, j] = 1
        out.append(E)
    for j in range(n):
        for k in range(j + 1, n):
            E = np.zeros((n, n), complex)
            E[j, k] = E[k, j] = s
            out.append(E)
            F = np.zeros((n, n), complex)
            F[j, k], F[k, j] = -1j * s, 1j * s
            out.append(F)
    return out


def _herm(A):
    return (A + A.conj().T) / 2


def _max_step(X, dX):
    """Largest alpha with X + alpha dX PSD (X must be positive definite)."""
    L = np.linalg.cholesky(X)
    Li = np.linalg.inv(L)
    lam = np.linalg.eigvalsh(_herm(Li @ dX @ Li.conj().T)).min()
    return math.inf if lam >= 0 else -1 / lam


def solve(C, A, b, tol: float = 1e-10, max_iter: int = 200, X0=None) -> SDPResult:
    """Primal-dual interior point for the standard form above.

    ``A`` is a stacked array of shape (m, n, n) of Hermitian constraint matrices.
    """
    C = _herm(np.asarray(C, complex))
    A = np.asarray(A, complex)
    b = np.asarray(b, float)
    m, n = A.shape[0], C.shape[0]
    Aflat = A.reshape(m, -1)

    def op(X):  # A(X)
        return (Aflat.conj() @ X.reshape(-1)).real

    def adj(y):  # A*(y)
        return (y @ Aflat).reshape(n, n)

    scale = max(1.0, np.abs(C).max(), np.abs(b).max())
    X = np.eye(n, dtype=complex) if X0 is None else _herm(np.asarray(X0, complex))
    y = np.zeros(m)
    Z = np.eye(n, dtype=complex) * scale
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        rp = b - op(X)
        Rd = _herm(C - adj(y) - Z)
        mu = np.vdot(X, Z).real / n
        pobj, dobj = np.vdot(C, X).real, float(b @ y)
        if (
            np.linalg.norm(rp) <= tol * (1 + np.linalg.norm(b))
            and np.linalg.norm(Rd) <= tol * (1 + np.linalg.norm(C))
            and abs(pobj - dobj) <= tol * (1 + abs(pobj))
        ):
            converged = True
            break
        Zi = np.linalg.inv(Z)
        Zi = _herm(Zi)
        # Schur complement M_ij = <A_i, X A_j Z^-1>
        XAZ = np.einsum("ab,jbc,cd->jad", X, A, Zi)
        Msch = (Aflat.conj() @ XAZ.reshape(m, -1).T).real
        Msch = (Msch + Msch.T) / 2
        try:
            cho = np.linalg.cholesky(Msch)
        except np.linalg.LinAlgError as exc:
            raise SDPError("Schur complement lost positive definiteness") from exc

        def direction(target):
            # target is the right-hand side of the linearized complementarity, e.g. sigma*mu*I
            rhs = rp + op(X @ Rd @ Zi) - op(target @ Zi) + op(X)
            dy = np.linalg.solve(cho.conj().T, np.linalg.solve(cho, rhs))
            dZ = _herm(Rd - adj(dy))
            dX = _herm(target @ Zi - X - X @ dZ @ Zi)
            return dX, dy, dZ

        dXa, dya, dZa = direction(np.zeros((n, n), complex))
        ap = min(1.0, _max_step(X, dXa))
        ad = min(1.0, _max_step(Z, dZa))
        mu_aff = np.vdot(X + ap * dXa, Z + ad * dZa).real / n
        sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
        dX, dy, dZ = direction(sigma * mu * np.eye(n) - dXa @ dZa)
        ap = min(1.0, 0.98 * _max_step(X, dX))
        ad = min(1.0, 0.98 * _max_step(Z, dZ))
        X = _herm(X + ap * dX)
        y = y + ad * dy
        Z = _herm(Z + ad * dZ)
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Z))):
            raise SDPError("non-finite iterate")
    rp = b - op(X)
    Rd = _herm(C - adj(y) - Z)
    pobj, dobj = np.vdot(C, X).real, float(b @ y)
    return SDPResult(
        X=X,
        y=y,
        Z=Z,
        primal_objective=pobj,
        dual_objective=dobj,
        gap=pobj - dobj,
        primal_residual=float(np.linalg.norm(rp)),
        dual_residual=float(np.linalg.norm(Rd)),
        iterations=it,
        converged=converged,
    )
