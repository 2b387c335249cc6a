import numpy as np
import pytest

from gkp_forge.codewords import (
    EnvelopeParam,
    InfeasibleRangeError,
    PerturbationSpec,
    best_conventional,
    conventional_code,
    envelope,
    perturb,
    robustness_point,
    zeta_scan,
)
from gkp_forge.loss import default_grid


def test_envelope_shape_and_symmetry():
    e = envelope(0, 3, 0.3)
    assert e.shape == (7,)
    assert e == pytest.approx(e[::-1])
    assert e.argmax() == 3


def test_envelope_param_validation():
    with pytest.raises(ValueError):
        EnvelopeParam(0.0)


def test_perturbation_bounds():
    with pytest.raises(ValueError):
        PerturbationSpec(0.03, 10)
    with pytest.raises(ValueError):
        PerturbationSpec(0.01, 0)


def test_perturbation_is_deterministic_and_small():
    code = conventional_code(1, 3, 1.1, 0.3)
    spec = PerturbationSpec(0.02, 5, seed=7)
    a, b = perturb(code, spec, 3), perturb(code, spec, 3)
    assert np.array_equal(a.coeffs, b.coeffs)
    ratio = a.coeffs / code.coeffs
    assert np.all(np.abs(ratio - 1) <= 0.01 + 1e-15)
    assert np.allclose(ratio.imag, 0)
    assert not np.array_equal(perturb(code, spec, 4).coeffs, a.coeffs)


def test_zero_epsilon_is_identity():
    code = conventional_code(0, 2, 1.0, 0.3)
    assert perturb(code, PerturbationSpec(0.0, 3), 0) is code


def test_scan_rows():
    rows = zeta_scan(3, 1.1, [0.2, 0.3], default_grid(2))
    assert [r[0] for r in rows] == [0.2, 0.3]


def test_best_conventional_is_feasible_minimum():
    grid = default_grid(3)
    zp, b = best_conventional(4, 1.1, grid=grid, points=11)
    assert b.l_eg <= 1e-6
    rows = zeta_scan(4, 1.1, np.linspace(0.1, 0.6, 11), grid)
    assert b.l_er_bar <= min(r[1] for r in rows if r[2] <= 1e-6) + 1e-12


def test_infeasible_range():
    with pytest.raises(InfeasibleRangeError):
        best_conventional(3, 1.1, zeta_range=(0.5, 0.6), grid=default_grid(2), points=3)


def test_robustness_needs_two_draws(table_code):
    with pytest.raises(ValueError):
        robustness_point(table_code, table_code, PerturbationSpec(0.01, 1), default_grid(2))


def test_identical_pairs_have_unit_gain(table_code):
    p = robustness_point(table_code, table_code, PerturbationSpec(0.01, 4), default_grid(2))
    assert p.mean_gain == pytest.approx(1.0)
    assert p.variance_ratio == pytest.approx(1.0)
