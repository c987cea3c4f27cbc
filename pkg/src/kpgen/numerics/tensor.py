"""Dense float64 arrays with a recorded operation tape for reverse-mode differentiation.

The engine is deliberately small: tensors are flat wrappers around numpy
arrays, and every differentiable primitive appends one entry to the active
:class:`Tape`. The record order is the execution order, which is already a
topological order of the computation, so the backward sweep is a single
reverse walk that visits each entry exactly once.

Recording happens only inside a ``with Tape() as tape:`` block; outside of
one, the same primitives run as plain forward computations (inference mode).
A tape and the tensors it references are confined to a single thread.
"""

from __future__ import annotations

import threading
from typing import Callable, Sequence

import numpy as np

from ..errors import ConfigError, NumericError, UsageError

_LOCAL = threading.local()


def _tape_stack() -> list:
    stack = getattr(_LOCAL, "stack", None)
    if stack is None:
        stack = []
        _LOCAL.stack = stack
    return stack


def active_tape() -> "Tape | None":
    """The innermost tape currently recording on this thread, if any."""
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """A dense float64 array with shape, values, and a gradient slot.

    ``requires_grad`` marks leaf parameters; results of primitives get it
    only while a tape is recording, so inference runs carry no graph.
    """

    __slots__ = ("values", "grad", "requires_grad", "name")

    def __init__(self, values, requires_grad: bool = False, name: str | None = None):
        self.values = np.asarray(values, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def size(self) -> int:
        return self.values.size

    def item(self) -> float:
        return float(self.values)

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.values)
        self.grad += g

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    # Operator sugar; the functions below do the work.
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


class _Entry:
    __slots__ = ("op", "out", "inputs", "backward_fn")

    def __init__(self, op: str, out: Tensor, inputs: tuple[Tensor, ...],
                 backward_fn: Callable[[np.ndarray], None]):
        self.op = op
        self.out = out
        self.inputs = inputs
        self.backward_fn = backward_fn


class Tape:
    """Ordered record of primitive operations, replayed in reverse by backward().

    Entries are appended in execution order, so every operation's inputs
    precede it; one reverse sweep therefore propagates gradients correctly
    and visits each operation exactly once. A tape is single-use: after
    ``backward`` it refuses further work.
    """

    def __init__(self):
        self._entries: list[_Entry] = []
        self._used = False

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _tape_stack()
        if not stack or stack[-1] is not self:
            raise UsageError("tape exited out of order")
        stack.pop()

    def __len__(self) -> int:
        return len(self._entries)

    def _push(self, op: str, out: Tensor, inputs: tuple[Tensor, ...], backward_fn) -> None:
        if self._used:
            raise UsageError("tape already consumed by backward()")
        self._entries.append(_Entry(op, out, inputs, backward_fn))

    def backward(self, loss: Tensor, check_finite: bool = True) -> None:
        """Propagate d(loss)/d(tensor) into the .grad slot of every recorded tensor.

        ``loss`` must be a scalar produced on this tape. Gradients of
        parameters never touched by the recorded computation are simply left
        at None (read as zero). With ``check_finite``, the first non-finite
        gradient encountered on the sweep raises, naming the operation it
        flows out of.
        """
        if self._used:
            raise UsageError("tape already consumed by backward()")
        if loss.values.ndim != 0:
            raise UsageError(f"loss must be a scalar, got shape {loss.values.shape}")
        if not any(e.out is loss for e in self._entries):
            raise UsageError("loss was not produced on this tape")
        self._used = True
        loss.grad = np.ones_like(loss.values)
        for entry in reversed(self._entries):
            g = entry.out.grad
            if g is None:
                continue
            entry.backward_fn(g)
            if check_finite:
                for t in entry.inputs:
                    if t.grad is not None and not np.all(np.isfinite(t.grad)):
                        raise NumericError(
                            f"non-finite gradient produced by backward of op '{entry.op}'"
                        )


def as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=np.float64))


def constant(values, name: str | None = None) -> Tensor:
    """A tensor that never receives gradients (masks, fixed inputs)."""
    return Tensor(values, requires_grad=False, name=name)


def zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape))


def _result(values: np.ndarray, *inputs: Tensor) -> tuple[Tensor, bool]:
    """Wrap op output; decide whether this op must be recorded."""
    tape = active_tape()
    record = tape is not None and any(t.requires_grad for t in inputs)
    return Tensor(values, requires_grad=record), record


def _push(op: str, out: Tensor, backward_fn, *inputs: Tensor) -> None:
    grads_into = tuple(t for t in inputs if t.requires_grad)
    active_tape()._push(op, out, grads_into, backward_fn)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to `shape`, undoing numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, ss) in enumerate(zip(g.shape, shape)) if ss == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise arithmetic (broadcasting allowed)
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out, record = _result(a.values + b.values, a, b)
    if record:
        def backward_fn(g):
            if a.requires_grad:
                a.accumulate_grad(_unbroadcast(g, a.values.shape))
            if b.requires_grad:
                b.accumulate_grad(_unbroadcast(g, b.values.shape))
        _push("add", out, backward_fn, a, b)
    return out


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out, record = _result(a.values - b.values, a, b)
    if record:
        def backward_fn(g):
            if a.requires_grad:
                a.accumulate_grad(_unbroadcast(g, a.values.shape))
            if b.requires_grad:
                b.accumulate_grad(_unbroadcast(-g, b.values.shape))
        _push("sub", out, backward_fn, a, b)
    return out


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out, record = _result(a.values * b.values, a, b)
    if record:
        av, bv = a.values, b.values
        def backward_fn(g):
            if a.requires_grad:
                a.accumulate_grad(_unbroadcast(g * bv, av.shape))
            if b.requires_grad:
                b.accumulate_grad(_unbroadcast(g * av, bv.shape))
        _push("mul", out, backward_fn, a, b)
    return out


def neg(a) -> Tensor:
    a = as_tensor(a)
    out, record = _result(-a.values, a)
    if record:
        def backward_fn(g):
            a.accumulate_grad(-g)
        _push("neg", out, backward_fn, a)
    return out


def matmul(a, b) -> Tensor:
    """2-D matrix product; higher ranks go through reshape()."""
    a, b = as_tensor(a), as_tensor(b)
    if a.values.ndim != 2 or b.values.ndim != 2:
        raise ConfigError(
            f"matmul expects 2-D operands, got {a.values.shape} @ {b.values.shape}"
        )
    if a.values.shape[1] != b.values.shape[0]:
        raise ConfigError(
            f"matmul inner dimensions differ: {a.values.shape} @ {b.values.shape}"
        )
    out, record = _result(a.values @ b.values, a, b)
    if record:
        av, bv = a.values, b.values
        def backward_fn(g):
            if a.requires_grad:
                a.accumulate_grad(g @ bv.T)
            if b.requires_grad:
                b.accumulate_grad(av.T @ g)
        _push("matmul", out, backward_fn, a, b)
    return out


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    # 1/(1+exp(-x)) computed branch-wise to avoid overflow for large |x|
    x = a.values
    vals = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                    np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    out, record = _result(vals, a)
    if record:
        def backward_fn(g, s=vals):
            a.accumulate_grad(g * s * (1.0 - s))
        _push("sigmoid", out, backward_fn, a)
    return out


def tanh(a) -> Tensor:
    a = as_tensor(a)
    vals = np.tanh(a.values)
    out, record = _result(vals, a)
    if record:
        def backward_fn(g, t=vals):
            a.accumulate_grad(g * (1.0 - t * t))
        _push("tanh", out, backward_fn, a)
    return out


def exp(a) -> Tensor:
    a = as_tensor(a)
    vals = np.exp(a.values)
    out, record = _result(vals, a)
    if record:
        def backward_fn(g, e=vals):
            a.accumulate_grad(g * e)
        _push("exp", out, backward_fn, a)
    return out


def log(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.log(a.values)
    out, record = _result(vals, a)
    if record:
        av = a.values
        def backward_fn(g):
            with np.errstate(divide="ignore", invalid="ignore"):
                a.accumulate_grad(g / av)
        _push("log", out, backward_fn, a)
    return out


# ---------------------------------------------------------------------------
# reductions and shape ops
# ---------------------------------------------------------------------------


def tensor_sum(a, axis: int | None = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    vals = a.values.sum(axis=axis, keepdims=keepdims)
    out, record = _result(vals, a)
    if record:
        in_shape = a.values.shape
        def backward_fn(g):
            gg = g
            if axis is not None and not keepdims:
                gg = np.expand_dims(gg, axis)
            a.accumulate_grad(np.broadcast_to(gg, in_shape).copy())
        _push("sum", out, backward_fn, a)
    return out


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    out, record = _result(a.values.reshape(shape), a)
    if record:
        in_shape = a.values.shape
        def backward_fn(g):
            a.accumulate_grad(g.reshape(in_shape))
        _push("reshape", out, backward_fn, a)
    return out


def concat(parts: Sequence, axis: int = -1) -> Tensor:
    tensors = [as_tensor(p) for p in parts]
    vals = np.concatenate([t.values for t in tensors], axis=axis)
    out, record = _result(vals, *tensors)
    if record:
        sizes = [t.values.shape[axis] for t in tensors]
        def backward_fn(g):
            offset = 0
            for t, n in zip(tensors, sizes):
                if t.requires_grad:
                    idx = [slice(None)] * g.ndim
                    idx[axis] = slice(offset, offset + n)
                    t.accumulate_grad(g[tuple(idx)])
                offset += n
        _push("concat", out, backward_fn, *tensors)
    return out


def narrow(a, axis: int, start: int, length: int) -> Tensor:
    """Contiguous slice of size `length` along `axis`."""
    a = as_tensor(a)
    idx = [slice(None)] * a.values.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)
    out, record = _result(a.values[idx], a)
    if record:
        in_shape = a.values.shape
        def backward_fn(g):
            full = np.zeros(in_shape)
            full[idx] = g
            a.accumulate_grad(full)
        _push("narrow", out, backward_fn, a)
    return out


# ---------------------------------------------------------------------------
# indexing ops (integer indices are plain numpy arrays, never differentiated)
# ---------------------------------------------------------------------------


def gather_rows(table, ids) -> Tensor:
    """table[ids]: rows of a [V, D] table for an integer id array of any shape."""
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.intp)
    out, record = _result(table.values[ids], table)
    if record:
        def backward_fn(g):
            if table.grad is None:
                table.grad = np.zeros_like(table.values)
            np.add.at(table.grad, ids, g)
        _push("gather_rows", out, backward_fn, table)
    return out


def gather_index(a, idx) -> Tensor:
    """out[b] = a[b, idx[b]] for a [B, N] tensor and an integer vector idx."""
    a = as_tensor(a)
    idx = np.asarray(idx, dtype=np.intp)
    rows = np.arange(a.values.shape[0])
    out, record = _result(a.values[rows, idx], a)
    if record:
        in_shape = a.values.shape
        def backward_fn(g):
            full = np.zeros(in_shape)
            full[rows, idx] = g
            a.accumulate_grad(full)
        _push("gather_index", out, backward_fn, a)
    return out


def scatter_add_cols(base, idx, src) -> Tensor:
    """out[b, idx[b, t]] += src[b, t] on top of a copy of base [B, N]."""
    base, src = as_tensor(base), as_tensor(src)
    idx = np.asarray(idx, dtype=np.intp)
    vals = base.values.copy()
    rows = np.arange(vals.shape[0])[:, None]
    np.add.at(vals, (np.broadcast_to(rows, idx.shape), idx), src.values)
    out, record = _result(vals, base, src)
    if record:
        def backward_fn(g):
            if base.requires_grad:
                base.accumulate_grad(g)
            if src.requires_grad:
                src.accumulate_grad(g[np.broadcast_to(rows, idx.shape), idx])
        _push("scatter_add_cols", out, backward_fn, base, src)
    return out


# ---------------------------------------------------------------------------
# softmax and dropout
# ---------------------------------------------------------------------------


def softmax(a, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
    """Max-stabilized softmax along `axis`; masked-out entries get probability 0.

    `mask` is a boolean array broadcastable to the input (True = keep). Every
    slice along `axis` must keep at least one entry.
    """
    a = as_tensor(a)
    x = a.values
    if x.size == 0:
        raise UsageError("softmax on an empty tensor")
    if mask is not None:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
        if not mask.any(axis=axis).all():
            raise UsageError("softmax mask removes every entry of some slice")
        x = np.where(mask, x, -np.inf)
    m = np.max(x, axis=axis, keepdims=True)
    e = np.exp(x - m)
    probs = e / e.sum(axis=axis, keepdims=True)
    out, record = _result(probs, a)
    if record:
        def backward_fn(g, p=probs):
            inner = (g * p).sum(axis=axis, keepdims=True)
            a.accumulate_grad(p * (g - inner))
        _push("softmax", out, backward_fn, a)
    return out


def dropout(a, rate: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: zero each element with probability `rate`, scale survivors.

    Identity when not training or rate == 0.
    """
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    a = as_tensor(a)
    if not training or rate == 0.0:
        return a
    if rng is None:
        raise UsageError("training-mode dropout needs an rng")
    keep = (rng.random(a.values.shape) >= rate) / (1.0 - rate)
    out, record = _result(a.values * keep, a)
    if record:
        def backward_fn(g):
            a.accumulate_grad(g * keep)
        _push("dropout", out, backward_fn, a)
    return out
