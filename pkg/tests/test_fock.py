import math

import numpy as np
import pytest

from gkp_forge.algebra import CodewordSpec, matrix_element
from gkp_forge.fock import (
    TruncationError,
    amplitude_damping_exact,
    average_codespace_fidelity,
    bloch_states,
    codeword_vector,
    codeword_vector_auto,
    dephasing_exact,
    kraus_apply,
    first_order_kraus,
    lindblad_evolve,
    loss_dephasing_exact,
    squeezed_coherent_fock,
    wigner_grid,
)
from gkp_forge.monomials import Monomial


def random_rho(rng, n, rank=3):
    T = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    T[n // 2 :] = 0  # keep population away from the truncation edge
    rho = T @ T.conj().T
    return rho / np.trace(rho)


def test_overlap_matches_analytic(table_code):
    c0, c1 = table_code
    v0, v1 = codeword_vector(c0), codeword_vector(c1)
    assert np.vdot(v0, v1) == pytest.approx(matrix_element(c0, c1, Monomial.I), abs=1e-10)


def test_squeezed_coherent_is_normalized():
    v = squeezed_coherent_fock(1.2 - 0.4j, 0.9, 200)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


def test_truncation_failure_raises():
    with pytest.raises(TruncationError):
        codeword_vector(CodewordSpec(0, 3, 1.1, np.ones(7)), 60)


def test_auto_truncation_escalates():
    code = CodewordSpec(0, 3, 1.1, np.ones(7))
    assert len(codeword_vector_auto(code, 60)) > 60


def test_exact_dephasing_matches_lindblad(rng):
    rho = random_rho(rng, 16)
    assert np.allclose(dephasing_exact(rho, 0.03), lindblad_evolve(rho, 0.0, 0.03, 1.0), atol=1e-9)


def test_exact_damping_matches_lindblad(rng):
    rho = random_rho(rng, 16)
    assert np.allclose(amplitude_damping_exact(rho, 0.02), lindblad_evolve(rho, 0.02, 0.0, 1.0), atol=1e-9)


def test_combined_channel_matches_lindblad(rng):
    rho = random_rho(rng, 16)
    assert np.allclose(loss_dephasing_exact(rho, 0.01, 0.02), lindblad_evolve(rho, 0.01, 0.02, 1.0), atol=1e-9)


def test_exact_channel_preserves_trace_and_positivity(rng):
    rho = random_rho(rng, 20)
    out = loss_dephasing_exact(rho, 0.05, 0.05)
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.eigvalsh(out).min() > -1e-12


def test_first_order_kraus_trace_defect_is_second_order():
    kt, kpt = 1e-3, 2e-3
    K = first_order_kraus(kt, kpt, 10)
    S = sum(k.conj().T @ k for k in K)
    n = np.diag(np.arange(10.0))
    residual = kt / 2 * n + kpt / 2 * n @ n
    assert np.allclose(S - np.eye(10), residual @ residual, atol=1e-15)


def test_first_order_agrees_with_exact_at_small_rates(rng):
    rho = random_rho(rng, 12)
    a = kraus_apply(first_order_kraus(1e-4, 1e-4, 12), rho)
    b = loss_dephasing_exact(rho, 1e-4, 1e-4)
    assert np.abs(a - b).max() < 1e-6


def test_bloch_states_are_unit(table_code):
    v0, v1 = (codeword_vector(c) for c in table_code)
    for psi in bloch_states(v0, v1):
        assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)


def test_identity_channel_fidelity(table_code):
    v0, v1 = (codeword_vector(c) for c in table_code)
    assert average_codespace_fidelity(v0, v1, lambda r: r) == pytest.approx(1.0, abs=1e-12)


def test_vacuum_wigner():
    v = np.zeros(80, complex)
    v[0] = 1
    ax = np.linspace(-5, 5, 101)
    g = wigner_grid(v, ax, ax)
    assert g.values.max() == pytest.approx(1 / math.pi, abs=1e-10)
    assert g.values[50, 50] == g.values.max()
    assert g.integral() == pytest.approx(1.0, abs=1e-6)
    assert g.outside_mass < 1e-9


def test_single_photon_wigner_is_negative_at_origin():
    v = np.zeros(30, complex)
    v[1] = 1
    g = wigner_grid(v, [0.0], [0.0])
    assert g.values[0, 0] == pytest.approx(-1 / math.pi, abs=1e-10)


def test_mixed_state_wigner_is_linear(rng):
    a, b = np.zeros(20, complex), np.zeros(20, complex)
    a[0], b[2] = 1, 1
    ax = np.linspace(-2, 2, 5)
    mix = wigner_grid(0.3 * np.outer(a, a) + 0.7 * np.outer(b, b), ax, ax).values
    assert np.allclose(mix, 0.3 * wigner_grid(a, ax, ax).values + 0.7 * wigner_grid(b, ax, ax).values, atol=1e-12)


def test_small_window_reports_outside_mass(table_code):
    v = codeword_vector(table_code[0])
    g = wigner_grid(v, np.linspace(-2, 2, 5), np.linspace(-2, 2, 5))
    assert g.outside_mass > 0.1
