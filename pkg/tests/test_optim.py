"""Adam and gradient clipping against hand-rolled update recurrences."""

import math

import numpy as np
import pytest

from kpgen.errors import ConfigError, NumericError
from kpgen.numerics import Adam, Tensor, clip_gradients, global_norm


def test_first_step_moves_by_lr():
    # with bias correction, step 1 is exactly -lr * g/(|g| + ~0) = -lr * sign(g)
    p = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
    p.grad = np.array([0.5, -0.25, 4.0])
    opt = Adam([p], lr=1e-4)
    before = p.values.copy()
    opt.step()
    delta = p.values - before
    np.testing.assert_allclose(delta, -1e-4 * np.sign(p.grad), atol=1e-10)


def test_ten_steps_match_reference_recurrence():
    rng = np.random.default_rng(7)
    theta0 = rng.standard_normal(6)
    grads = [rng.standard_normal(6) for _ in range(10)]
    lr, b1, b2, eps = 1e-3, 0.9, 0.999, 1e-8

    # reference: the recurrence written out longhand
    theta = theta0.copy()
    m = np.zeros(6)
    v = np.zeros(6)
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        theta = theta - lr * m_hat / (np.sqrt(v_hat) + eps)

    p = Tensor(theta0.copy(), requires_grad=True)
    opt = Adam([p], lr=lr, beta1=b1, beta2=b2, eps=eps)
    for g in grads:
        p.grad = g.copy()
        opt.step()
    np.testing.assert_allclose(p.values, theta, atol=1e-12)


def test_skips_params_without_grad():
    a = Tensor(np.array([1.0]), requires_grad=True)
    b = Tensor(np.array([2.0]), requires_grad=True)
    a.grad = np.array([1.0])
    opt = Adam([a, b])
    opt.step()
    assert b.values[0] == 2.0
    assert a.values[0] != 1.0


def test_moment_state_unaffected_by_skipped_steps():
    # a param that gets a grad only on step 2 must be bias-corrected with t=2
    # but its own moments start from zero
    a = Tensor(np.array([0.0]), requires_grad=True)
    opt = Adam([a], lr=1.0, eps=1e-8)
    opt.step()  # no grad anywhere
    a.grad = np.array([3.0])
    opt.step()
    m = 0.1 * 3.0
    v = 0.001 * 9.0
    expected = -1.0 * (m / (1 - 0.9 ** 2)) / (math.sqrt(v / (1 - 0.999 ** 2)) + 1e-8)
    np.testing.assert_allclose(a.values, [expected], atol=1e-12)


def test_zero_grad_clears_all():
    a = Tensor(np.array([1.0]), requires_grad=True)
    a.grad = np.array([1.0])
    opt = Adam([a])
    opt.zero_grad()
    assert a.grad is None


def test_rejects_bad_hyperparams():
    p = Tensor(np.zeros(1), requires_grad=True)
    with pytest.raises(ConfigError):
        Adam([p], lr=0.0)
    with pytest.raises(ConfigError):
        Adam([p], beta1=1.0)
    with pytest.raises(ConfigError):
        Adam([p], eps=0.0)


def test_rejects_nonfinite_grad():
    p = Tensor(np.zeros(2), requires_grad=True)
    p.grad = np.array([1.0, np.nan])
    with pytest.raises(NumericError):
        Adam([p]).step()


def test_global_norm_hand_value():
    # 3-4-5 triangle across two arrays
    assert global_norm([np.array([3.0]), np.array([4.0])]) == pytest.approx(5.0)


def test_clip_rescales_above_threshold():
    g1, g2 = np.array([3.0]), np.array([4.0])
    grads, norm = clip_gradients([g1, g2], threshold=1.0)
    assert norm == pytest.approx(5.0)
    np.testing.assert_allclose(grads[0], [0.6], atol=1e-12)
    np.testing.assert_allclose(grads[1], [0.8], atol=1e-12)
    assert global_norm(grads) == pytest.approx(1.0)


def test_clip_keeps_direction():
    rng = np.random.default_rng(3)
    g = rng.standard_normal(20)
    orig = g.copy()
    (clipped,), norm = clip_gradients([g], threshold=0.1)
    cos = clipped @ orig / (np.linalg.norm(clipped) * np.linalg.norm(orig))
    assert cos == pytest.approx(1.0)


def test_clip_noop_below_threshold():
    g = np.array([0.3, 0.4])  # norm 0.5
    grads, norm = clip_gradients([g], threshold=1.0)
    assert norm == pytest.approx(0.5)
    np.testing.assert_array_equal(grads[0], [0.3, 0.4])


def test_clip_disabled_at_zero_threshold():
    g = np.array([100.0])
    grads, norm = clip_gradients([g], threshold=0.0)
    np.testing.assert_array_equal(grads[0], [100.0])
    assert norm == pytest.approx(100.0)


def test_clip_rejects_nonfinite():
    with pytest.raises(NumericError):
        clip_gradients([np.array([np.inf])], threshold=1.0)


def test_clip_mutates_in_place():
    g = np.array([10.0])
    grads, _ = clip_gradients([g], threshold=1.0)
    assert grads[0] is g
    np.testing.assert_allclose(g, [1.0], atol=1e-12)
