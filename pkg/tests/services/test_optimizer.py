import math

import numpy as np
import pytest

from app.errors import StateError
from app.schemas.config import TrainConfig
from app.services.optimizer import TrainState, adam_step, all_finite, bce_grad, bce_loss
from app.services.tensor import Tensor


def test_bce_at_half_is_ln2():
    assert bce_loss(0.5, 1) == pytest.approx(math.log(2), abs=1e-15)


def test_bce_confident_correct_is_near_zero():
    assert bce_loss(1 - 1e-7, 1) == pytest.approx(1e-7, rel=1e-3)


def test_bce_is_clipped_at_the_extremes():
    assert np.isfinite(bce_loss(0.0, 1))
    assert np.isfinite(bce_loss(1.0, 0))
    assert bce_loss(0.0, 1) == pytest.approx(-math.log(1e-7))


def test_bce_gradient_formula():
    assert bce_grad(0.5, 1) == pytest.approx(-2.0)
    assert bce_grad(0.25, 0) == pytest.approx(0.25 / (0.25 * 0.75))


def test_bce_gradient_matches_finite_difference():
    p, h = 0.3, 1e-7
    numeric = (bce_loss(p + h, 1) - bce_loss(p - h, 1)) / (2 * h)
    assert bce_grad(p, 1) == pytest.approx(numeric, rel=1e-6)


def test_adam_first_step_by_hand():
    w = Tensor(np.zeros(1))
    state = TrainState.for_parameters([w])
    cfg = TrainConfig(learning_rate=0.1, beta1=0.9, beta2=0.999, eps_adam=1e-8)
    adam_step(state, [np.ones(1)], cfg)
    assert state.step == 1
    assert w.data[0] == pytest.approx(-0.1 / (1 + 1e-8), abs=1e-15)
    assert state.m[0][0] == pytest.approx(0.1)
    assert state.v[0][0] == pytest.approx(0.001)


def test_adam_zero_gradient_leaves_fresh_parameters_unchanged():
    w = Tensor(np.array([1.0, -2.0]))
    state = TrainState.for_parameters([w])
    adam_step(state, [np.zeros(2)], TrainConfig())
    assert np.array_equal(w.data, [1.0, -2.0])
    assert not np.any(state.m[0]) and not np.any(state.v[0])


def test_adam_zero_gradient_decays_moments():
    w = Tensor(np.array([1.0, -2.0]))
    state = TrainState.for_parameters([w])
    cfg = TrainConfig()
    adam_step(state, [np.array([0.5, -0.5])], cfg)
    m_before, v_before = state.m[0].copy(), state.v[0].copy()
    adam_step(state, [np.zeros(2)], cfg)
    assert np.allclose(state.m[0], cfg.beta1 * m_before)
    assert np.allclose(state.v[0], cfg.beta2 * v_before)
    assert np.all(np.abs(state.m[0]) < np.abs(m_before))


def test_adam_trajectories_are_bit_identical(rng):
    grads = [rng.standard_normal((3, 2)) for _ in range(50)]

    def run():
        w = Tensor(np.ones((3, 2)))
        state = TrainState.for_parameters([w])
        for g in grads:
            adam_step(state, [g], TrainConfig(learning_rate=0.05))
        return w.data

    assert np.array_equal(run(), run())


def test_adam_rejects_missing_gradient():
    state = TrainState.for_parameters([Tensor(np.zeros(2)), Tensor(np.zeros(3))])
    with pytest.raises(StateError):
        adam_step(state, [np.zeros(2), None], TrainConfig())
    with pytest.raises(StateError):
        adam_step(state, [np.zeros(2)], TrainConfig())


def test_moment_buffers_must_match_parameters():
    with pytest.raises(StateError):
        TrainState(params=[Tensor(np.zeros(2))], m=[np.zeros(3)], v=[np.zeros(2)])


def test_all_finite():
    assert all_finite([np.ones(3), np.zeros(2)])
    assert not all_finite([np.array([1.0, np.nan])])
