import numpy as np
import pytest

from inhand.errors import ConfigError, TrainingFault
from inhand.numkit import AdamState, adam_step, clip_grads_


def _scalar_adam_oracle(grads, lr, beta1=0.9, beta2=0.999, eps=1e-8, p0=1.0):
    """Hand-rolled scalar Adam trace; returns the parameter after each step."""
    m = v = 0.0
    p = p0
    history = []
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        p = p - lr * m_hat / (np.sqrt(v_hat) + eps)
        history.append(p)
    return history


def test_zero_gradient_is_fixed_point():
    params = [np.array([1.5, -2.0]), np.array([[0.5]])]
    state = AdamState.init(params, lr=0.1)
    before = [p.copy() for p in params]
    adam_step(params, [np.zeros_like(p) for p in params], state)
    assert all(np.array_equal(a, b) for a, b in zip(params, before))
    assert all(np.all(m == 0) for m in state.m)
    assert all(np.all(v == 0) for v in state.v)
    assert state.step == 1


def test_first_step_closed_form():
    # g=1 at step 1: m_hat/sqrt(v_hat) = 1, so the step is ~lr
    params = [np.array([1.0])]
    state = AdamState.init(params, lr=0.1)
    adam_step(params, [np.array([1.0])], state)
    assert params[0][0] == pytest.approx(1.0 - 0.1, abs=1e-8)


def test_two_identical_steps_match_scalar_oracle():
    params = [np.array([1.0])]
    state = AdamState.init(params, lr=0.1)
    adam_step(params, [np.array([1.0])], state)
    adam_step(params, [np.array([1.0])], state)
    oracle = _scalar_adam_oracle([1.0, 1.0], lr=0.1)
    assert params[0][0] == pytest.approx(oracle[1], rel=1e-12)


def test_non_finite_gradient_raises():
    params = [np.array([1.0])]
    state = AdamState.init(params, lr=0.1)
    with pytest.raises(TrainingFault):
        adam_step(params, [np.array([np.nan])], state)


def test_shape_mismatch_raises():
    params = [np.array([1.0, 2.0])]
    state = AdamState.init(params, lr=0.1)
    with pytest.raises(ConfigError):
        adam_step(params, [np.array([1.0])], state)


def test_grad_clipping():
    grads = [np.array([3.0, 4.0])]  # norm 5
    norm = clip_grads_(grads, max_norm=1.0)
    assert norm == pytest.approx(5.0)
    assert np.linalg.norm(grads[0]) == pytest.approx(1.0)
    # already small: untouched
    grads = [np.array([0.3, 0.4])]
    clip_grads_(grads, max_norm=1.0)
    assert np.allclose(grads[0], [0.3, 0.4])
