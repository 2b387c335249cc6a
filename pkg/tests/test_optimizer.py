import math

import numpy as np
import pytest

from gkp_forge.algebra import FMatrix
from gkp_forge.loss import LossWeights, default_grid, l_tot
from gkp_forge.optimizer import (
    N_MLP,
    N_PARAMS,
    AdamState,
    FParams,
    LossModel,
    NonFiniteLossError,
    TrainConfig,
    adam_step,
    codes_from_checkpoint,
    cosine_warm_restarts,
    init_params,
    load_checkpoint,
    mlp_coefficients,
    network_inputs,
    save_checkpoint,
    train,
)


def test_parameter_count():
    assert N_MLP == 62 and N_PARAMS == 68


def test_init_is_bounded_and_f_is_identity():
    theta = init_params(3)
    assert np.abs(theta[:15]).max() <= 1 / math.sqrt(3)
    assert FParams(tuple(theta[N_MLP:])).to_matrix() == FMatrix.identity()
    assert np.array_equal(init_params(3), theta)


def test_network_inputs():
    X = network_inputs(3, 1.1)
    assert X.shape == (14, 3)
    assert np.abs(X[:, 0]).max() == pytest.approx(1.0)
    assert set(X[:, 1]) == {0.0, 1.0}


def test_real_mode_has_no_imaginary_part():
    c0, c1 = mlp_coefficients(init_params(0), 3, 1.1, real=True)
    assert np.all(c0.coeffs.imag == 0) and np.all(c1.coeffs.imag == 0)


def test_zero_network_is_degenerate():
    from gkp_forge.algebra import DegenerateCodeError

    with pytest.raises(DegenerateCodeError):
        mlp_coefficients(np.zeros(N_PARAMS), 3, 1.1)


def test_tape_loss_matches_reference_loss():
    weights = LossWeights(grid=default_grid(3))
    model = LossModel(3, 1.1, weights)
    theta = init_params(1)
    theta[N_MLP:] += 0.05
    step = model.value(theta)
    ref = l_tot(*mlp_coefficients(theta, 3, 1.1), FParams(tuple(theta[N_MLP:])).to_matrix(), weights)
    assert step.l_tot == pytest.approx(ref.l_tot, rel=1e-10)
    assert step.l_er_bar_exact == pytest.approx(ref.l_er_bar, rel=1e-10)


def test_adam_minimizes_quadratic_bowl():
    target = np.array([1.0, -2.0, 0.5])
    x, state = np.zeros(3), AdamState.zeros(3)
    for _ in range(5000):
        x, state = adam_step(x, 2 * (x - target), state, 1e-2)
    assert np.abs(x - target).max() < 1e-6


def test_adam_shape_mismatch():
    with pytest.raises(ValueError):
        adam_step(np.zeros(2), np.zeros(3), AdamState.zeros(2), 0.1)


def test_schedule_landmarks():
    assert cosine_warm_restarts(0, 500, 2, 1e-4, 1e-6) == pytest.approx(1e-4)
    assert cosine_warm_restarts(500, 500, 2, 1e-4, 1e-6) == pytest.approx(1e-4)
    assert cosine_warm_restarts(250, 500, 2, 1.0, 0.0) == pytest.approx(0.5)
    # second cycle is twice as long
    assert cosine_warm_restarts(1000, 500, 2, 1.0, 0.0) == pytest.approx(0.5)
    assert cosine_warm_restarts(1500, 500, 2, 1.0, 0.0) == pytest.approx(1.0)


def test_zero_steps_returns_initialization():
    res = train(TrainConfig(steps=0, seed=4))
    assert np.array_equal(res.params, init_params(4))


def test_short_training_decreases_loss():
    res = train(TrainConfig(steps=30, learning_rate=1e-2, grid_points=2))
    losses = [p.l_tot for _, _, p in res.history]
    assert res.best_loss.l_tot < losses[0]


def test_checkpoint_round_trip_and_determinism(tmp_path):
    cfg = TrainConfig(steps=5, grid_points=2)
    d1 = save_checkpoint(train(cfg), tmp_path / "a.json")
    d2 = save_checkpoint(train(cfg), tmp_path / "b.json")
    assert d1 == d2
    c0, c1, f = codes_from_checkpoint(load_checkpoint(tmp_path / "a.json"))
    assert c0.M == 3 and c1.u == 1
    assert abs(f.f11 * f.f22 - f.f12 * f.f21 - 1) < 1e-12


def test_bad_checkpoint(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"architecture": [3, 4, 2]}')
    with pytest.raises(ValueError):
        load_checkpoint(p)


def test_nan_aborts():
    theta = init_params(0)
    theta[0] = np.nan
    with pytest.raises(NonFiniteLossError):
        train(TrainConfig(steps=2, grid_points=2), init=theta)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0)
    with pytest.raises(ValueError):
        TrainConfig(steps=-1)
