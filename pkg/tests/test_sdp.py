import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gkp_forge import sdp

cp = pytest.importorskip("cvxpy")


def recovery_like(rng, ne=4, rank=6):
    n = 2 * ne
    T = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    W = T @ T.conj().T
    off = 0.02 * (rng.normal() + 1j * rng.normal())
    g = np.array([[1, off], [np.conj(off), 1.0]])
    basis = sdp.hermitian_basis(ne)
    A = np.array([np.kron(g.conj(), E) for E in basis])
    b = np.array([np.trace(E).real for E in basis])
    return W, g, A, b


def cvxpy_value(W, g, ne):
    X = cp.Variable((2 * ne, 2 * ne), hermitian=True)
    S = sum(g[a, c] * X[a * ne : (a + 1) * ne, c * ne : (c + 1) * ne] for a in (0, 1) for c in (0, 1))
    prob = cp.Problem(cp.Maximize(cp.real(cp.trace(X @ W)) / 4), [X >> 0, S == np.eye(ne)])
    prob.solve()
    return prob.value


def test_hermitian_basis_is_orthonormal():
    B = sdp.hermitian_basis(3)
    G = np.array([[np.vdot(x, y).real for y in B] for x in B])
    assert len(B) == 9
    assert np.allclose(G, np.eye(9))


def test_matches_cvxpy_on_recovery_shaped_problems():
    rng = np.random.default_rng(5)
    for _ in range(3):
        W, g, A, b = recovery_like(rng)
        res = sdp.solve(-W / 4, A, b)
        assert res.converged
        assert res.gap <= 1e-8
        assert -res.primal_objective == pytest.approx(cvxpy_value(W, g, 4), rel=1e-6)


def test_diagonal_lp():
    # min x1 + 2 x2 s.t. x1 + x2 = 1 has value 1 at x = (1, 0)
    C = np.diag([1.0, 2.0])
    A = np.array([np.eye(2), np.array([[0, 1], [1, 0]]) / np.sqrt(2)])
    res = sdp.solve(C, A, [1.0, 0.0])
    assert res.primal_objective == pytest.approx(1.0, abs=1e-8)
    assert res.X[0, 0].real == pytest.approx(1.0, abs=1e-6)


def test_iteration_cap_reports_nonconvergence():
    rng = np.random.default_rng(0)
    W, _, A, b = recovery_like(rng)
    res = sdp.solve(-W / 4, A, b, max_iter=2)
    assert not res.converged


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_certificate_invariants(seed):
    W, _, A, b = recovery_like(np.random.default_rng(seed), ne=3, rank=3)
    res = sdp.solve(-W / 4, A, b)
    assert res.converged
    assert np.linalg.eigvalsh(res.X).min() > -1e-9
    assert np.linalg.eigvalsh(res.Z).min() > -1e-9
    assert abs(res.primal_objective - res.dual_objective) <= 1e-8 * max(1, abs(res.primal_objective))
