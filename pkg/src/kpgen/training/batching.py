"""Epoch batching: shuffle, length-bucketing, right padding with masks."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..model import Batch
from ..textproc import BOS_ID, PAD_ID, EncodedPair


def pad_batch(pairs: list[EncodedPair]) -> Batch:
    """Right-pad a group of pairs into one Batch (mask 1 marks real positions)."""
    if not pairs:
        raise ConfigError("cannot pad an empty batch")
    bsz = len(pairs)
    src_len = max(len(p.source_ids) for p in pairs)
    tgt_len = max(len(p.target_ids) for p in pairs)
    src_ids = np.full((bsz, src_len), PAD_ID, dtype=np.intp)
    src_extended = np.full((bsz, src_len), PAD_ID, dtype=np.intp)
    src_mask = np.zeros((bsz, src_len))
    tgt_in = np.full((bsz, tgt_len), PAD_ID, dtype=np.intp)
    tgt_out = np.full((bsz, tgt_len), PAD_ID, dtype=np.intp)
    tgt_mask = np.zeros((bsz, tgt_len))
    for b, p in enumerate(pairs):
        ls, lt = len(p.source_ids), len(p.target_ids)
        src_ids[b, :ls] = p.source_ids
        src_extended[b, :ls] = p.source_extended_ids
        src_mask[b, :ls] = 1.0
        tgt_in[b, 0] = BOS_ID
        tgt_in[b, 1:lt] = p.target_ids[:-1]
        tgt_out[b, :lt] = p.target_ids
        tgt_mask[b, :lt] = 1.0
    return Batch(
        src_ids=src_ids, src_extended=src_extended, src_mask=src_mask,
        tgt_in=tgt_in, tgt_out=tgt_out, tgt_mask=tgt_mask,
        n_oov=max(len(p.oov_words) for p in pairs),
    )


def make_batches(pairs: list[EncodedPair], batch_size: int,
                 rng: np.random.Generator | None = None) -> list[Batch]:
    """One epoch of padded batches covering every pair exactly once.

    With an rng, pairs are shuffled, then stably sorted by source length so
    batches pad little; full batches are emitted in shuffled order with the
    remainder batch last. Without an rng the grouping is the deterministic
    length order.
    """
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    if not pairs:
        return []
    order = list(rng.permutation(len(pairs))) if rng is not None else list(range(len(pairs)))
    order.sort(key=lambda i: len(pairs[i].source_ids))  # stable: keeps shuffled tie order
    groups = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    if rng is not None and len(groups) > 1:
        full = groups[:-1] if len(groups[-1]) < batch_size else groups
        tail = groups[len(full):]
        perm = rng.permutation(len(full))
        groups = [full[i] for i in perm] + tail
    return [pad_batch([pairs[i] for i in group]) for group in groups]
