"""Beam-search generation of ranked keyphrases from a trained model.

Search runs over the extended vocabulary (generation slots plus this
source's copy slots), so out-of-vocabulary source words can appear in
output phrases. Scores are raw accumulated log-probabilities — no length
normalization; the short-phrase bias is handled downstream by the
single-word post-processing rule instead.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from . import numerics as T
from .errors import ConfigError, UsageError
from .model import ModelParams, decode_step_batch, encode_batch
from .textproc import (
    BOS_ID,
    EOS_ID,
    PAD_ID,
    UNK_ID,
    EncodedPair,
    Vocabulary,
    decode_extended,
    stem_phrase,
)

__all__ = [
    "BeamConfig",
    "DecodedPhrase",
    "Hypothesis",
    "beam_search",
    "postprocess",
    "prediction_record",
    "score_phrase",
]


@dataclass(frozen=True)
class BeamConfig:
    """Search width, phrase length cap, and how many phrases to return."""

    beam_size: int = 200
    max_depth: int = 6
    count: int = 50

    def __post_init__(self):
        if self.beam_size < 1:
            raise ConfigError(f"beam_size must be >= 1, got {self.beam_size}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.count < 1:
            raise ConfigError(f"count must be >= 1, got {self.count}")


@dataclass
class Hypothesis:
    """A partial decode: emitted ids (extended allowed), score, decoder state."""

    ids: tuple[int, ...]
    logprob: float
    state: np.ndarray
    finished: bool = False


@dataclass(frozen=True)
class DecodedPhrase:
    """One ranked output phrase with the ids that produced it."""

    words: tuple[str, ...]
    ids: tuple[int, ...]
    logprob: float
    finished: bool

    @property
    def phrase(self) -> str:
        return " ".join(self.words)


# expansions that can never appear inside a useful keyphrase
_FORBIDDEN = (PAD_ID, BOS_ID, UNK_ID)


def beam_search(params: ModelParams, pair: EncodedPair, vocab: Vocabulary,
                config: BeamConfig = BeamConfig()) -> list[DecodedPhrase]:
    """Ranked phrases for one source, scores non-increasing.

    Starts from <bos>; each depth expands every live hypothesis over the
    extended vocabulary and keeps the top ``beam_size`` expansions by
    accumulated log-probability (ties broken by expansion order).
    Expansions that emit <eos> — or that reach ``max_depth`` — move to a
    max-heap of results; <pad>/<bos>/<unk> and the empty phrase are pruned.
    Extended ids resolve back to the source's surface words.
    """
    if not pair.source_ids:
        raise UsageError("cannot decode from an empty source")
    n_oov = len(pair.oov_words)
    src_ext = np.asarray(pair.source_extended_ids, dtype=np.intp)[None, :]
    t_len = src_ext.shape[1]
    src_mask = np.ones((1, t_len))

    enc_states, s0 = encode_batch(
        params, np.asarray(pair.source_ids, dtype=np.intp)[None, :], src_mask)
    enc_values = enc_states.values

    heap: list[tuple[float, int, Hypothesis]] = []
    pushes = 0

    def collect(hyp: Hypothesis) -> None:
        nonlocal pushes
        heapq.heappush(heap, (-hyp.logprob, pushes, hyp))
        pushes += 1

    live = [Hypothesis(ids=(), logprob=0.0, state=s0.values[0])]
    for _ in range(config.max_depth):
        bsz = len(live)
        probs, states, _ = decode_step_batch(
            params,
            np.asarray([h.ids[-1] if h.ids else BOS_ID for h in live]),
            T.constant(np.stack([h.state for h in live])),
            T.constant(np.broadcast_to(enc_values, (bsz,) + enc_values.shape[1:])),
            np.broadcast_to(src_ext, (bsz, t_len)),
            np.broadcast_to(src_mask, (bsz, t_len)),
            n_oov,
        )
        with np.errstate(divide="ignore"):
            scores = np.log(probs.values)
        scores[:, list(_FORBIDDEN)] = -np.inf
        for b, hyp in enumerate(live):
            scores[b] += hyp.logprob
            if not hyp.ids:
                scores[b, EOS_ID] = -np.inf  # an empty phrase is no phrase
        flat = scores.ravel()
        width = scores.shape[1]

        parents, live = live, []
        for idx in np.argsort(-flat, kind="stable")[: config.beam_size]:
            if flat[idx] == -np.inf:
                break
            parent, token = parents[idx // width], int(idx % width)
            if token == EOS_ID:
                collect(Hypothesis(ids=parent.ids, logprob=float(flat[idx]),
                                   state=parent.state, finished=True))
                continue
            hyp = Hypothesis(ids=parent.ids + (token,), logprob=float(flat[idx]),
                             state=states.values[idx // width])
            if len(hyp.ids) >= config.max_depth:
                collect(hyp)
            else:
                live.append(hyp)
        if not live:
            break

    results = []
    while heap and len(results) < config.count:
        _, _, hyp = heapq.heappop(heap)
        words = tuple(decode_extended(hyp.ids, vocab, pair.oov_words))
        results.append(DecodedPhrase(words=words, ids=hyp.ids,
                                     logprob=hyp.logprob, finished=hyp.finished))
    return results


def score_phrase(params: ModelParams, pair: EncodedPair, token_ids,
                 add_eos: bool = False) -> float:
    """Teacher-forced log-probability of a token sequence for this source.

    Sums per-step log-probabilities of ``token_ids`` (extended ids allowed),
    plus the <eos> step when ``add_eos`` is set — matching the score of a
    finished beam hypothesis.
    """
    ids = list(token_ids) + ([EOS_ID] if add_eos else [])
    if not ids:
        raise UsageError("cannot score an empty sequence")
    n_oov = len(pair.oov_words)
    src_ext = np.asarray(pair.source_extended_ids, dtype=np.intp)[None, :]
    src_mask = np.ones((1, src_ext.shape[1]))
    enc_states, state = encode_batch(
        params, np.asarray(pair.source_ids, dtype=np.intp)[None, :], src_mask)
    total, prev = 0.0, BOS_ID
    for token in ids:
        probs, state, _ = decode_step_batch(
            params, np.asarray([prev]), state, enc_states, src_ext, src_mask, n_oov)
        with np.errstate(divide="ignore"):
            total += float(np.log(probs.values[0, token]))
        prev = token
    return total


def postprocess(phrases: list[DecodedPhrase]) -> list[DecodedPhrase]:
    """Final ranking filter: stemmed dedup, then keep only the first
    single-word phrase; order is otherwise preserved."""
    seen: set[tuple[str, ...]] = set()
    kept_single = False
    out = []
    for p in phrases:
        key = tuple(stem_phrase(list(p.words)))
        if key in seen:
            continue
        if len(p.words) == 1:
            if kept_single:
                continue
            kept_single = True
        seen.add(key)
        out.append(p)
    return out


def prediction_record(doc_id: str, phrases: list[DecodedPhrase]) -> dict:
    """One prediction-file record: {"id", "keyphrases": [{"phrase", "logprob"}]}."""
    return {
        "id": doc_id,
        "keyphrases": [{"phrase": p.phrase, "logprob": p.logprob} for p in phrases],
    }
