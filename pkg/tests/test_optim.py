"""Adam and gradient clipping."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scoremh import autodiff as ad
from scoremh.errors import ArgumentError, TrainingError
from scoremh.optim import AdamState, adam_step, clip_gradients


def test_first_step_moves_by_lr_sign():
    p = ad.parameter(np.array([1.0, -2.0, 3.0]))
    g = np.array([0.5, -1.5, 2.0])
    state = AdamState(lr=1e-3)
    before = p.value.copy()
    adam_step([("p", p)], {"p": g}, state)
    # bias-corrected first step is lr * g / (|g| + eps) = lr * sign(g) up to eps
    assert np.all(np.abs((before - p.value) - 1e-3 * np.sign(g)) < 1e-9)


def test_zero_gradient_leaves_parameters_unchanged():
    p = ad.parameter(np.array([1.0, 2.0]))
    state = AdamState(lr=0.1)
    adam_step([("p", p)], {"p": np.zeros(2)}, state)
    assert np.array_equal(p.value, [1.0, 2.0])


@settings(max_examples=20, deadline=None)
@given(st.floats(1e-5, 1.0), st.integers(1, 5))
def test_zero_gradient_invariance_any_lr_and_steps(lr, steps):
    p = ad.parameter(np.array([0.7, -0.3]))
    state = AdamState(lr=lr)
    for _ in range(steps):
        adam_step([("p", p)], {"p": np.zeros(2)}, state)
    assert np.array_equal(p.value, [0.7, -0.3])


def test_quadratic_descent_strictly_decreases():
    # f(w) = w^2 from w=1, lr = 0.1: |w| shrinks every step
    w = ad.parameter(np.array([1.0]))
    state = AdamState(lr=0.1)
    prev = abs(float(w.value[0]))
    for _ in range(10):
        g = 2.0 * w.value
        adam_step([("w", w)], {"w": g}, state)
        cur = abs(float(w.value[0]))
        assert cur < prev
        prev = cur


def test_step_counter_increments():
    p = ad.parameter(np.zeros(1))
    state = AdamState(lr=0.01)
    for k in range(3):
        adam_step([("p", p)], {"p": np.ones(1)}, state)
        assert state.step == k + 1


def test_nonfinite_gradient_raises():
    p = ad.parameter(np.zeros(2))
    state = AdamState(lr=0.01)
    with pytest.raises(TrainingError):
        adam_step([("p", p)], {"p": np.array([1.0, np.nan])}, state)


def test_clip_examples():
    assert np.array_equal(clip_gradients(np.array([5.0, -0.1]), 1.0), [1.0, -0.1])
    g = np.array([0.3, -0.7])
    assert np.array_equal(clip_gradients(g, 1.0), g)  # within bounds: unchanged
    assert np.array_equal(clip_gradients(np.array([2.0, 2.0]), 2.0), [2.0, 2.0])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=6), st.floats(0.1, 100.0))
def test_clip_is_idempotent_and_bounded(vals, c):
    g = np.array(vals)
    once = clip_gradients(g, c)
    assert np.max(np.abs(once)) <= c
    assert np.array_equal(clip_gradients(once, c), once)


def test_clip_rejects_bad_threshold():
    with pytest.raises(ArgumentError):
        clip_gradients(np.ones(2), 0.0)
