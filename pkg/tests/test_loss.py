import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gkp_forge import reference as ref
from gkp_forge.algebra import FMatrix
from gkp_forge.codewords import conventional_pair
from gkp_forge.loss import (
    LossWeights,
    combine,
    default_grid,
    f_er,
    gain,
    kl_report,
    l_eg,
    l_er,
    l_er_bar,
    l_er_values,
    l_st,
    l_st_terms,
    l_tot,
)
from gkp_forge.noise import NoiseScale, pair_product, poly_matrix_element

from conftest import random_code


def test_default_grid():
    g = default_grid()
    assert len(g) == 36
    assert max(s.kappa_tau for s in g) == pytest.approx(0.005)
    assert g[0] == NoiseScale(0.0, 0.0)


def test_report_matches_polynomial_elements(table_code):
    c0, c1 = table_code
    scale = NoiseScale(0.002, 0.003)
    rep = kl_report(c0, c1, scale)
    for j in (1, 2, 3):
        for i in (1, 2, 3):
            p = pair_product(j, i, scale)
            eps = poly_matrix_element(c1, c1, p) - poly_matrix_element(c0, c0, p)
            assert rep.epsilon[j - 1, i - 1] == pytest.approx(eps, abs=1e-13)
            assert rep.zeta[j - 1, i - 1] == pytest.approx(poly_matrix_element(c0, c1, p), abs=1e-13)


def test_zero_noise_loss_is_overlap(table_code):
    c0, c1 = table_code
    rep = kl_report(c0, c1, NoiseScale(0.0, 0.0))
    assert l_er(rep) == pytest.approx(2 * abs(rep.delta), abs=1e-14)


def test_vectorized_grid_agrees_with_pointwise(table_code):
    grid = default_grid(3, 0.004)
    vals = l_er_values(*table_code, grid)
    assert vals == pytest.approx([l_er(kl_report(*table_code, s)) for s in grid], rel=1e-12)
    assert l_er_bar(*table_code, grid) == pytest.approx(np.mean(vals), rel=1e-14)


def test_empty_grid_rejected(table_code):
    with pytest.raises(ValueError):
        l_er_values(*table_code, [])


def test_table_code_is_eigenstate_feasible(table_code):
    assert l_eg(*table_code) == 0.0


def test_wide_envelope_violates_threshold():
    assert l_eg(*conventional_pair(3, 1.1, 0.6)) > 0.1


def test_stabilizer_terms(table_code):
    terms = l_st_terms(*table_code, ref.complex_optimum_f())
    assert len(terms) == 8
    assert l_st(*table_code, ref.complex_optimum_f()) == pytest.approx(sum(terms.values()))


def test_weights_validation():
    with pytest.raises(ValueError):
        LossWeights(eta1=0.6, eta2=0.5)


def test_combine_weights():
    b = combine(1.0, 2.0, 3.0, LossWeights(0.1, 0.2))
    assert b.l_tot == pytest.approx(0.7 + 0.2 + 0.6)


def test_total_consistency(table_code):
    w = LossWeights(grid=default_grid(2))
    b = l_tot(*table_code, FMatrix.identity(), w)
    assert b.l_er_bar == pytest.approx(l_er_bar(*table_code, w.grid))
    assert len(b.l_er) == 4


def test_gain_and_f_er():
    assert gain(2.0, 1.0) == 2.0
    with pytest.raises(ZeroDivisionError):
        gain(1.0, 0.0)
    assert f_er(FMatrix.identity()) == 0.0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), phase=st.floats(0, 2 * math.pi), scale=st.floats(0.1, 10))
def test_loss_ignores_global_phase_and_scale(seed, phase, scale):
    rng = np.random.default_rng(seed)
    c0, c1 = random_code(rng, 0, 2, 1.0), random_code(rng, 1, 2, 1.0)
    grid = default_grid(2)
    base = l_er_bar(c0, c1, grid)
    moved = c0.with_coeffs(c0.coeffs * scale * np.exp(1j * phase))
    assert l_er_bar(moved, c1, grid) == pytest.approx(base, rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), kt=st.floats(0, 0.01), kpt=st.floats(0, 0.01))
def test_loss_is_nonnegative(seed, kt, kpt):
    rng = np.random.default_rng(seed)
    c0, c1 = random_code(rng, 0, 1, 0.8), random_code(rng, 1, 1, 0.8)
    assert l_er(kl_report(c0, c1, NoiseScale(kt, kpt))) >= 0
