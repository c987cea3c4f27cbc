"""Self-contained numerics: tensors with reverse-mode autodiff, a GRU cell, Adam."""

from .tensor import (
    Tape,
    Tensor,
    active_tape,
    add,
    as_tensor,
    concat,
    constant,
    dropout,
    exp,
    gather_index,
    gather_rows,
    log,
    matmul,
    mul,
    narrow,
    neg,
    reshape,
    scatter_add_cols,
    sigmoid,
    softmax,
    sub,
    tanh,
    tensor_sum,
    zeros,
)
from .recurrent import GRUParams, gru_cell
from .optim import Adam, clip_gradients, global_norm

__all__ = [
    "Adam",
    "GRUParams",
    "Tape",
    "Tensor",
    "active_tape",
    "add",
    "as_tensor",
    "clip_gradients",
    "concat",
    "constant",
    "dropout",
    "exp",
    "gather_index",
    "gather_rows",
    "global_norm",
    "gru_cell",
    "log",
    "matmul",
    "mul",
    "narrow",
    "neg",
    "reshape",
    "scatter_add_cols",
    "sigmoid",
    "softmax",
    "sub",
    "tanh",
    "tensor_sum",
    "zeros",
]
