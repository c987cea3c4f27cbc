"""Shared test helpers: finite-difference gradient checking."""

import numpy as np
import pytest

from kpgen.numerics import Tape, Tensor


def numeric_grad(fn, param: Tensor, eps: float = 1e-5) -> np.ndarray:
    """Central finite differences of scalar fn() w.r.t. every entry of param."""
    base = param.values
    grad = np.zeros_like(base)
    flat = base.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + eps
        hi = fn()
        flat[i] = keep - eps
        lo = fn()
        flat[i] = keep
        gflat[i] = (hi - lo) / (2.0 * eps)
    return grad


def assert_grads_close(analytic: np.ndarray, numeric: np.ndarray, context: str = ""):
    """Elementwise: |a - n| < 1e-4 * max(|a|, |n|), or both tiny (< 1e-7 apart)."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    assert a.shape == n.shape, f"{context}: shape {a.shape} vs {n.shape}"
    diff = np.abs(a - n)
    tol = 1e-4 * np.maximum(np.abs(a), np.abs(n))
    ok = (diff < tol) | (diff < 1e-7)
    if not ok.all():
        worst = np.unravel_index(np.argmax(diff - tol), diff.shape)
        raise AssertionError(
            f"{context}: gradient mismatch at {worst}: "
            f"analytic={a[worst]:.10g} numeric={n[worst]:.10g} diff={diff[worst]:.3g}"
        )


def check_gradients(build_loss, params: list[Tensor], context: str = ""):
    """Compare tape gradients of build_loss() against finite differences.

    build_loss must rerun the full forward pass from current param values
    and return a scalar Tensor (when recording) whose .item() is the loss.
    """
    for p in params:
        p.grad = None
    with Tape() as tape:
        loss = build_loss()
    tape.backward(loss)

    def forward() -> float:
        return build_loss().item()

    for k, p in enumerate(params):
        analytic = p.grad if p.grad is not None else np.zeros_like(p.values)
        numeric = numeric_grad(forward, p)
        assert_grads_close(analytic, numeric, context=f"{context} param[{k}]")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
