"""GRU cell on top of the tensor engine.

Gate convention:

    z = sigmoid(x W_z + h U_z + b_z)        update gate
    r = sigmoid(x W_r + h U_r + b_r)        reset gate
    h~ = tanh(x W_h + (r * h) U_h + b_h)    candidate state
    h' = z * h + (1 - z) * h~

so with all parameters zero, z = 0.5 and h' = 0.5 * h.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ..errors import ConfigError
from . import tensor as T
from .tensor import Tensor


@dataclass
class GRUParams:
    """The nine learnable arrays of one GRU cell (input dim D, state dim H)."""

    w_z: Tensor  # [D, H]
    u_z: Tensor  # [H, H]
    b_z: Tensor  # [H]
    w_r: Tensor  # [D, H]
    u_r: Tensor  # [H, H]
    b_r: Tensor  # [H]
    w_h: Tensor  # [D, H]
    u_h: Tensor  # [H, H]
    b_h: Tensor  # [H]

    @classmethod
    def create(cls, input_dim: int, hidden_dim: int,
               rng: np.random.Generator, scale: float = 0.1) -> "GRUParams":
        """Uniform(-scale, scale) initialization for every array."""
        if input_dim <= 0 or hidden_dim <= 0:
            raise ConfigError(
                f"GRU dims must be positive, got input={input_dim} hidden={hidden_dim}"
            )
        def init(*shape):
            return Tensor(rng.uniform(-scale, scale, size=shape), requires_grad=True)
        return cls(
            w_z=init(input_dim, hidden_dim), u_z=init(hidden_dim, hidden_dim),
            b_z=init(hidden_dim),
            w_r=init(input_dim, hidden_dim), u_r=init(hidden_dim, hidden_dim),
            b_r=init(hidden_dim),
            w_h=init(input_dim, hidden_dim), u_h=init(hidden_dim, hidden_dim),
            b_h=init(hidden_dim),
        )

    def tensors(self) -> list[Tensor]:
        return [getattr(self, f.name) for f in fields(self)]

    @property
    def input_dim(self) -> int:
        return self.w_z.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.w_z.shape[1]


def gru_cell(params: GRUParams, x: Tensor, h_prev: Tensor) -> Tensor:
    """One GRU step: x [B, D] and h_prev [B, H] to the next state [B, H]."""
    if x.shape[-1] != params.input_dim:
        raise ConfigError(
            f"GRU input dim mismatch: x has {x.shape[-1]}, cell expects {params.input_dim}"
        )
    if h_prev.shape[-1] != params.hidden_dim:
        raise ConfigError(
            f"GRU state dim mismatch: h has {h_prev.shape[-1]}, cell expects {params.hidden_dim}"
        )
    z = T.sigmoid(x @ params.w_z + h_prev @ params.u_z + params.b_z)
    r = T.sigmoid(x @ params.w_r + h_prev @ params.u_r + params.b_r)
    h_cand = T.tanh(x @ params.w_h + (r * h_prev) @ params.u_h + params.b_h)
    return z * h_prev + (1.0 - z) * h_cand
