import numpy as np
import pytest

from gkp_forge.codewords import conventional_pair
from gkp_forge.fock import bloch_states
from gkp_forge.noise import NoiseScale
from gkp_forge.recovery import (
    TraceDriftError,
    apply_noise,
    build_error_basis,
    full_entanglement_fidelity,
    multi_cycle,
    optimal_recovery,
    transpose_recovery,
    w_matrix,
    w_matrix_analytic,
)

SCALE = NoiseScale(0.0004, 0.0004 / 1.5)


@pytest.fixture(scope="module")
def small_pair():
    # a modest conventional code keeps the Fock space small
    return conventional_pair(2, 0.8, 0.35)


@pytest.fixture(scope="module")
def result(small_pair):
    return optimal_recovery(small_pair, NoiseScale(0.004, 0.002), n_trunc=120)


def test_error_kets_are_orthonormal(small_pair):
    basis = build_error_basis(small_pair, SCALE, 120)
    G = basis.kets.conj().T @ basis.kets
    assert np.allclose(G, np.eye(basis.n_err), atol=1e-9)
    assert basis.n_err == 6


def test_zero_noise_drops_null_kets(small_pair):
    basis = build_error_basis(small_pair, NoiseScale(0.0, 0.0), 120)
    assert basis.labels == ((1, 0), (1, 1))


def test_unknown_model(small_pair):
    with pytest.raises(ValueError):
        apply_noise(np.eye(3), SCALE, "lossy")


def test_w_matrix_closed_form_matches_fock(small_pair):
    basis = build_error_basis(small_pair, NoiseScale(0.003, 0.002), 120)
    assert np.allclose(w_matrix(basis, "first_order"), w_matrix_analytic(basis), atol=1e-9)


def test_w_matrix_is_psd(result):
    assert np.linalg.eigvalsh(result.W).min() > -1e-12


def test_zero_noise_fidelity_is_one(small_pair):
    res = optimal_recovery(small_pair, NoiseScale(0.0, 0.0), n_trunc=120)
    assert res.solution.fidelity == pytest.approx(1.0, abs=1e-9)


def test_solution_certificate(result):
    sol = result.solution
    assert sol.converged and sol.gap <= 1e-8
    assert sol.constraint_residual < 1e-8
    assert np.linalg.eigvalsh(sol.X).min() > -1e-9


def test_sdp_beats_transpose(result):
    assert result.solution.fidelity >= result.transpose_fidelity - 1e-9


def test_recovery_is_trace_preserving(result):
    K = result.channel.kraus_matrices()
    S = sum(k.conj().T @ k for k in K)
    assert np.abs(S - np.eye(len(S))).max() < 1e-8


def test_low_rank_apply_matches_kraus_sum(result, rng):
    N = result.basis.n_trunc
    T = rng.normal(size=(N, 2)) + 1j * rng.normal(size=(N, 2))
    rho = T @ T.conj().T
    dense = sum(k @ rho @ k.conj().T for k in result.channel.kraus_matrices())
    assert np.allclose(result.channel.apply(rho), dense, atol=1e-10)


def test_transpose_recovery_stays_inside_tp(result):
    assert transpose_recovery(result.basis).tp_defect() <= 1e-12


def test_full_fidelity_includes_completion(result):
    # the SDP objective treats the codewords as orthonormal; the gap is set by their overlap
    overlap = abs(result.basis.logical_gram[0, 1])
    assert full_entanglement_fidelity(result.channel, result.basis) >= result.solution.fidelity - 4 * overlap


def test_zero_cycles_is_empty(result):
    V = result.basis.code_vectors
    assert multi_cycle(np.outer(V[:, 0], V[:, 0].conj()), result.channel, SCALE, 0) == []


def test_cycles_preserve_trace_and_alternate(result):
    V = result.basis.code_vectors
    psi = bloch_states(V[:, 0], V[:, 1])[2]
    pts = multi_cycle(np.outer(psi, psi.conj()), result.channel, NoiseScale(0.004, 0.002), 3, label="+")
    assert [p.phase for p in pts] == ["noise", "recovery"] * 3
    assert all(p.state_label == "+" for p in pts)
    # recovery lifts the fidelity back up after every noise step
    assert all(pts[i + 1].fidelity > pts[i].fidelity for i in range(0, 6, 2))


def test_trace_drift_aborts(result):
    V = result.basis.code_vectors
    rho = np.outer(V[:, 0], V[:, 0].conj())
    with pytest.raises(TraceDriftError):
        multi_cycle(rho, result.channel, SCALE, 2, noise=lambda r: 1.01 * r)


def test_negative_cycles(result):
    with pytest.raises(ValueError):
        multi_cycle(np.eye(2), result.channel, SCALE, -1)
