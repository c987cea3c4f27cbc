"""Adam with bias correction, plus global-norm gradient clipping.

Update rule per parameter theta with gradient g at step t:

    m = b1 * m + (1 - b1) * g
    v = b2 * v + (1 - b2) * g^2
    m_hat = m / (1 - b1^t),  v_hat = v / (1 - b2^t)
    theta -= lr * m_hat / (sqrt(v_hat) + eps)

Clipping rescales the whole gradient set by threshold/norm when the global
L2 norm over all arrays exceeds the threshold.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError, NumericError
from .tensor import Tensor


def global_norm(grads: list[np.ndarray]) -> float:
    return math.sqrt(sum(float((g * g).sum()) for g in grads))


def clip_gradients(grads: list[np.ndarray], threshold: float) -> tuple[list[np.ndarray], float]:
    """Rescale grads in place if their global L2 norm exceeds threshold.

    Returns (grads, pre-clip norm). A non-finite norm is a hard error; a
    threshold <= 0 disables clipping entirely.
    """
    norm = global_norm(grads)
    if not math.isfinite(norm):
        raise NumericError(f"non-finite gradient norm: {norm}")
    if threshold > 0 and norm > threshold:
        scale = threshold / norm
        for g in grads:
            g *= scale
    return grads, norm


class Adam:
    """Adam over a fixed list of parameter tensors."""

    def __init__(self, params: list[Tensor], lr: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {lr}")
        if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
            raise ConfigError(f"betas must lie in [0, 1), got {beta1}, {beta2}")
        if eps <= 0:
            raise ConfigError(f"eps must be positive, got {eps}")
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = [np.zeros_like(p.values) for p in self.params]
        self._v = [np.zeros_like(p.values) for p in self.params]

    def step(self) -> None:
        """Apply one update from the .grad slots; params with grad None are skipped."""
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise NumericError("non-finite gradient passed to Adam")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.values -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
