"""Encoder-decoder keyphrase model with attention and an optional copy mechanism.

Architecture, for source x_1..x_T and target y_1..y_L:

  * shared embedding matrix for encoder and decoder inputs (switchable);
  * bidirectional GRU encoder; per-position forward/backward states are
    concatenated and projected back to hidden_dim with tanh, giving H;
  * decoder initial state s_0 = tanh(W_init b_1 + b_init) from the final
    backward state;
  * additive attention score a(s, h) = v . tanh(W_s s + W_h h), normalized
    per step into weights alpha, context c = sum_j alpha_j h_j;
  * decoder GRU consumes [embed(y_prev); c] and updates s;
  * generation logits over the vocabulary come from [s; c];
  * with the copy mechanism, per-position copy scores
    psi_j = act(h_j W_c) . s are normalized JOINTLY with the generation
    logits by one shared softmax, and each position's copy probability is
    added to the extended-vocabulary slot of the word at that position.

The extended vocabulary appends the pair's out-of-vocabulary source words
after the vocab_size generation slots, so a copied OOV word keeps its
identity instead of collapsing to <unk>. With the copy mechanism off the
extension slots exist but hold probability zero.

All core functions are batched; the single-pair forms the rest of the
package quotes (encode / attend / decode_step / pair_loss) are thin
wrappers around them.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from .errors import ConfigError, NumericError, UsageError
from .numerics import GRUParams, Tensor, gru_cell
from .numerics import tensor as T
from .textproc import BOS_ID, UNK_ID, EncodedPair

_COPY_ACTIVATIONS = ("tanh", "sigmoid")


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters that fix every array shape in the model."""

    vocab_size: int
    embedding_dim: int = 150
    hidden_dim: int = 300
    copy_enabled: bool = True
    dropout_rate: float = 0.5
    init_range: float = 0.1
    copy_score_activation: str = "tanh"
    share_embedding: bool = True

    def __post_init__(self):
        if self.vocab_size < 1 or self.embedding_dim < 1 or self.hidden_dim < 1:
            raise ConfigError(
                f"dimensions must be >= 1: vocab={self.vocab_size} "
                f"embedding={self.embedding_dim} hidden={self.hidden_dim}"
            )
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.init_range <= 0:
            raise ConfigError(f"init_range must be positive, got {self.init_range}")
        if self.copy_score_activation not in _COPY_ACTIVATIONS:
            raise ConfigError(
                f"copy_score_activation must be one of {_COPY_ACTIVATIONS}, "
                f"got {self.copy_score_activation!r}"
            )

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass
class ModelParams:
    """All learnable arrays, shapes fixed by the config."""

    config: ModelConfig
    embedding: Tensor          # [V, E]
    enc_fwd: GRUParams         # E -> H
    enc_bwd: GRUParams         # E -> H
    combine_w: Tensor          # [2H, H]
    combine_b: Tensor          # [H]
    init_w: Tensor             # [H, H]
    init_b: Tensor             # [H]
    attn_w_s: Tensor           # [H, H]
    attn_w_h: Tensor           # [H, H]
    attn_v: Tensor             # [H]
    decoder: GRUParams         # E+H -> H
    copy_w: Tensor             # [H, H]
    out_w: Tensor              # [2H, V]
    out_b: Tensor              # [V]
    dec_embedding: Tensor | None = None  # [V, E] when not shared

    def named_tensors(self) -> list[tuple[str, Tensor]]:
        """Deterministically ordered (name, tensor) pairs over every array."""
        out: list[tuple[str, Tensor]] = []
        for f in fields(self):
            if f.name == "config":
                continue
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, GRUParams):
                out.extend((f"{f.name}.{g.name}", getattr(value, g.name))
                           for g in fields(value))
            else:
                out.append((f.name, value))
        return out

    def tensors(self) -> list[Tensor]:
        return [t for _, t in self.named_tensors()]

    def decoder_embedding(self) -> Tensor:
        return self.embedding if self.dec_embedding is None else self.dec_embedding


def init_params(config: ModelConfig, rng: np.random.Generator) -> ModelParams:
    """Every array i.i.d. uniform in [-init_range, init_range]."""
    r = config.init_range
    E, H, V = config.embedding_dim, config.hidden_dim, config.vocab_size

    def u(*shape):
        return Tensor(rng.uniform(-r, r, size=shape), requires_grad=True)

    return ModelParams(
        config=config,
        embedding=u(V, E),
        enc_fwd=GRUParams.create(E, H, rng, scale=r),
        enc_bwd=GRUParams.create(E, H, rng, scale=r),
        combine_w=u(2 * H, H),
        combine_b=u(H),
        init_w=u(H, H),
        init_b=u(H),
        attn_w_s=u(H, H),
        attn_w_h=u(H, H),
        attn_v=u(H),
        decoder=GRUParams.create(E + H, H, rng, scale=r),
        copy_w=u(H, H),
        out_w=u(2 * H, V),
        out_b=u(V),
        dec_embedding=None if config.share_embedding else u(V, E),
    )


# ---------------------------------------------------------------------------
# batched core; ids and masks are plain numpy arrays
# ---------------------------------------------------------------------------


def _linear3(x: Tensor, w: Tensor) -> Tensor:
    """[B, T, D] @ [D, K] -> [B, T, K] through a flatten."""
    b, t, d = x.shape
    return T.reshape(T.reshape(x, (b * t, d)) @ w, (b, t, w.shape[1]))


def _stack_steps(steps: list[Tensor]) -> Tensor:
    """T tensors of [B, H] -> [B, T, H]."""
    b, h = steps[0].shape
    return T.concat([T.reshape(s, (b, 1, h)) for s in steps], axis=1)


def _masked_step(mask_col: np.ndarray, new: Tensor, prev: Tensor) -> Tensor:
    """Update rows whose mask is 1; carry the previous state elsewhere."""
    m = T.constant(mask_col[:, None])
    return m * new + (1.0 - m) * prev


def encode_directions(params: ModelParams, src_ids: np.ndarray, src_mask: np.ndarray,
                      training: bool = False, rng: np.random.Generator | None = None,
                      ) -> tuple[list[Tensor], list[Tensor]]:
    """Per-position forward and backward GRU states, before combination.

    Padded positions carry the neighboring state unchanged (forward) or
    stay at zero until the first real token (backward).
    """
    bsz, t_len = src_ids.shape
    if t_len == 0:
        raise UsageError("cannot encode an empty source")
    emb = T.gather_rows(params.embedding, src_ids)                    # [B,T,E]
    emb = T.dropout(emb, params.config.dropout_rate, training, rng)
    e_dim = params.config.embedding_dim
    h_dim = params.config.hidden_dim

    def run(order, cell):
        h = T.zeros((bsz, h_dim))
        states: dict[int, Tensor] = {}
        for t in order:
            x_t = T.reshape(T.narrow(emb, 1, t, 1), (bsz, e_dim))
            h = _masked_step(src_mask[:, t], gru_cell(cell, x_t, h), h)
            states[t] = h
        return [states[t] for t in range(t_len)]

    fwd = run(range(t_len), params.enc_fwd)
    bwd = run(range(t_len - 1, -1, -1), params.enc_bwd)
    return fwd, bwd


def encode_batch(params: ModelParams, src_ids: np.ndarray, src_mask: np.ndarray,
                 training: bool = False, rng: np.random.Generator | None = None,
                 ) -> tuple[Tensor, Tensor]:
    """Source ids [B, T] -> (H [B, T, hidden], s_0 [B, hidden])."""
    fwd, bwd = encode_directions(params, src_ids, src_mask, training, rng)
    combined = [
        T.tanh(T.concat([f, b], axis=1) @ params.combine_w + params.combine_b)
        for f, b in zip(fwd, bwd)
    ]
    enc_states = _stack_steps(combined)
    s0 = T.tanh(bwd[0] @ params.init_w + params.init_b)
    return enc_states, s0


def attend_batch(params: ModelParams, s_prev: Tensor, enc_states: Tensor,
                 src_mask: np.ndarray) -> tuple[Tensor, Tensor]:
    """(context [B, H], weights [B, T]) for decoder states [B, H]."""
    bsz, t_len, h_dim = enc_states.shape
    keys = _linear3(enc_states, params.attn_w_h)                      # [B,T,H]
    query = T.reshape(s_prev @ params.attn_w_s, (bsz, 1, h_dim))
    scores = T.tensor_sum(T.tanh(keys + query) * params.attn_v, axis=2)  # [B,T]
    alpha = T.softmax(scores, axis=-1, mask=src_mask.astype(bool))
    context = T.tensor_sum(T.reshape(alpha, (bsz, t_len, 1)) * enc_states, axis=1)
    return context, alpha


def decode_step_batch(params: ModelParams, y_prev: np.ndarray, s_prev: Tensor,
                      enc_states: Tensor, src_extended: np.ndarray,
                      src_mask: np.ndarray, n_oov: int,
                      training: bool = False, rng: np.random.Generator | None = None,
                      ) -> tuple[Tensor, Tensor, Tensor]:
    """One decoder step over a batch.

    y_prev holds previous token ids, plain or extended; extended ids embed
    as <unk> since copied OOV words have no embedding row. Returns
    (probabilities [B, vocab+n_oov], new state [B, H], attention [B, T]).
    """
    cfg = params.config
    v_size = cfg.vocab_size
    y_prev = np.asarray(y_prev)
    if np.any(y_prev < 0) or np.any(y_prev >= v_size + n_oov):
        raise UsageError(
            f"previous-token id outside extended vocabulary of size {v_size + n_oov}"
        )
    bsz, t_len, h_dim = enc_states.shape
    dec_ids = np.where(y_prev >= v_size, UNK_ID, y_prev)
    emb = T.gather_rows(params.decoder_embedding(), dec_ids)          # [B,E]
    emb = T.dropout(emb, cfg.dropout_rate, training, rng)
    context, alpha = attend_batch(params, s_prev, enc_states, src_mask)
    s_t = gru_cell(params.decoder, T.concat([emb, context], axis=1), s_prev)

    readout = T.concat([s_t, context], axis=1)                        # [B,2H]
    readout = T.dropout(readout, cfg.dropout_rate, training, rng)
    gen_logits = readout @ params.out_w + params.out_b                # [B,V]

    if not cfg.copy_enabled:
        probs = T.softmax(gen_logits, axis=-1)
        if n_oov:
            probs = T.concat([probs, T.zeros((bsz, n_oov))], axis=1)
        return probs, s_t, alpha

    act = T.tanh if cfg.copy_score_activation == "tanh" else T.sigmoid
    transformed = _linear3(enc_states, params.copy_w)
    copy_scores = T.tensor_sum(act(transformed) * T.reshape(s_t, (bsz, 1, h_dim)), axis=2)
    # one softmax over generation and copy slots: a single shared normalizer
    joint = T.concat([gen_logits, copy_scores], axis=1)               # [B,V+T]
    joint_mask = np.concatenate(
        [np.ones((bsz, v_size), dtype=bool), src_mask.astype(bool)], axis=1)
    joint_probs = T.softmax(joint, axis=-1, mask=joint_mask)
    p_gen = T.narrow(joint_probs, 1, 0, v_size)
    p_copy = T.narrow(joint_probs, 1, v_size, t_len)
    base = T.concat([p_gen, T.zeros((bsz, n_oov))], axis=1) if n_oov else p_gen
    # each source position's copy mass lands on its word's extended slot,
    # so repeated words aggregate across positions
    probs = T.scatter_add_cols(base, src_extended, p_copy)
    return probs, s_t, alpha


@dataclass
class Batch:
    """Padded id arrays for a batch of encoded pairs (right padding, mask 1 = real)."""

    src_ids: np.ndarray        # [B, Ts] int
    src_extended: np.ndarray   # [B, Ts] int
    src_mask: np.ndarray       # [B, Ts] float 0/1
    tgt_in: np.ndarray         # [B, Tt] int, <bos> then target[:-1]
    tgt_out: np.ndarray        # [B, Tt] int, target ids ending in <eos>
    tgt_mask: np.ndarray       # [B, Tt] float 0/1
    n_oov: int                 # widest per-pair OOV count in the batch

    @property
    def size(self) -> int:
        return self.src_ids.shape[0]


def batch_losses(params: ModelParams, batch: Batch, training: bool = False,
                 rng: np.random.Generator | None = None) -> Tensor:
    """Per-pair negative log-likelihood [B] under teacher forcing.

    Padded target steps contribute exactly zero. With the copy mechanism
    off, extended target ids are scored as <unk>: the plain model has no
    way to emit a copied out-of-vocabulary word.
    """
    cfg = params.config
    enc_states, s = encode_batch(params, batch.src_ids, batch.src_mask, training, rng)
    tgt_out = batch.tgt_out
    if not cfg.copy_enabled:
        tgt_out = np.where(tgt_out >= cfg.vocab_size, UNK_ID, tgt_out)
    step_losses = []
    for t in range(batch.tgt_in.shape[1]):
        probs, s_new, _ = decode_step_batch(
            params, batch.tgt_in[:, t], s, enc_states, batch.src_extended,
            batch.src_mask, batch.n_oov, training, rng)
        s = _masked_step(batch.tgt_mask[:, t], s_new, s)
        p = T.gather_index(probs, tgt_out[:, t])                      # [B]
        live = batch.tgt_mask[:, t].astype(bool)
        if np.any(p.values[live] <= 0.0):
            raise NumericError(f"zero probability for target token at step {t}")
        m = T.constant(batch.tgt_mask[:, t])
        step_losses.append(T.neg(T.log(p * m + (1.0 - m))))
    total = step_losses[0]
    for sl in step_losses[1:]:
        total = total + sl
    return total


# ---------------------------------------------------------------------------
# single-pair forms
# ---------------------------------------------------------------------------


@dataclass
class EncoderOutput:
    """Combined per-position states [T, hidden] and the decoder start state [hidden]."""

    states: Tensor
    s0: Tensor

    def __len__(self) -> int:
        return self.states.shape[0]


@dataclass
class StepDistribution:
    """One decoder step: extended-vocabulary probabilities, new state, attention."""

    probs: Tensor      # [vocab + n_oov]
    state: Tensor      # [hidden]
    attention: Tensor  # [T]


def _ones_mask(t_len: int) -> np.ndarray:
    return np.ones((1, t_len))


def encode(params: ModelParams, source_ids: Sequence[int]) -> EncoderOutput:
    """Encode one source; states [T, hidden], s_0 [hidden]."""
    ids = np.asarray(list(source_ids), dtype=np.intp)
    if ids.size == 0:
        raise UsageError("cannot encode an empty source")
    enc_states, s0 = encode_batch(params, ids[None, :], _ones_mask(ids.size))
    t_len, h = ids.size, params.config.hidden_dim
    return EncoderOutput(states=T.reshape(enc_states, (t_len, h)), s0=T.reshape(s0, (h,)))


def attend(params: ModelParams, s_prev: Tensor, enc: EncoderOutput) -> tuple[Tensor, Tensor]:
    """(context [hidden], weights [T]) for a single decoder state [hidden]."""
    t_len, h = enc.states.shape
    context, alpha = attend_batch(
        params, T.reshape(s_prev, (1, h)), T.reshape(enc.states, (1, t_len, h)),
        _ones_mask(t_len))
    return T.reshape(context, (h,)), T.reshape(alpha, (t_len,))


def decode_step(params: ModelParams, y_prev_id: int, s_prev: Tensor,
                enc: EncoderOutput, pair: EncodedPair) -> StepDistribution:
    """One decoder step for one pair; y_prev_id may be a plain or extended id."""
    t_len, h = enc.states.shape
    n_oov = len(pair.oov_words)
    probs, s_t, alpha = decode_step_batch(
        params, np.array([y_prev_id]), T.reshape(s_prev, (1, h)),
        T.reshape(enc.states, (1, t_len, h)),
        np.asarray(pair.source_extended_ids, dtype=np.intp)[None, :],
        _ones_mask(t_len), n_oov)
    return StepDistribution(
        probs=T.reshape(probs, (params.config.vocab_size + n_oov,)),
        state=T.reshape(s_t, (h,)),
        attention=T.reshape(alpha, (t_len,)),
    )


def pair_to_batch(pair: EncodedPair) -> Batch:
    """A batch of one, no padding."""
    src = np.asarray(pair.source_ids, dtype=np.intp)[None, :]
    ext = np.asarray(pair.source_extended_ids, dtype=np.intp)[None, :]
    tgt = list(pair.target_ids)
    return Batch(
        src_ids=src,
        src_extended=ext,
        src_mask=np.ones_like(src, dtype=np.float64),
        tgt_in=np.asarray([[BOS_ID] + tgt[:-1]], dtype=np.intp),
        tgt_out=np.asarray([tgt], dtype=np.intp),
        tgt_mask=np.ones((1, len(tgt))),
        n_oov=len(pair.oov_words),
    )


def pair_loss(params: ModelParams, pair: EncodedPair, training: bool = False,
              rng: np.random.Generator | None = None) -> Tensor:
    """Scalar negative log-likelihood of one pair under teacher forcing."""
    if not pair.target_ids:
        raise UsageError("pair has an empty target")
    losses = batch_losses(params, pair_to_batch(pair), training, rng)
    return T.reshape(losses, ())
