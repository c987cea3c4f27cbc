"""Keyphrase generation with an encoder-decoder model and optional copy mechanism."""

__version__ = "0.1.0"

from .decoding import BeamConfig, DecodedPhrase, beam_search, postprocess, score_phrase
from .errors import (
    CheckpointError,
    CheckpointShapeError,
    CheckpointTruncatedError,
    CheckpointVersionError,
    ConfigError,
    KpgenError,
    NumericError,
    UsageError,
)
from .evaluation import MetricReport, evaluate_corpus, phrases_match, prf_at_k, recall_at_k
from .model import ModelConfig, ModelParams, init_params, pair_loss
from .runconfig import RunConfig
from .textproc import (
    Document,
    EncodedPair,
    Vocabulary,
    build_vocabulary,
    encode_pair,
    load_corpus,
    partition_keyphrases,
    stem_phrase,
    stem_word,
    tokenize,
)
from .training import Checkpoint, TrainConfig, TrainResult, load_checkpoint, save_checkpoint, train

__all__ = [
    "BeamConfig",
    "Checkpoint",
    "CheckpointError",
    "CheckpointShapeError",
    "CheckpointTruncatedError",
    "CheckpointVersionError",
    "ConfigError",
    "DecodedPhrase",
    "Document",
    "EncodedPair",
    "KpgenError",
    "MetricReport",
    "ModelConfig",
    "ModelParams",
    "NumericError",
    "RunConfig",
    "TrainConfig",
    "TrainResult",
    "UsageError",
    "Vocabulary",
    "__version__",
    "beam_search",
    "build_vocabulary",
    "encode_pair",
    "evaluate_corpus",
    "init_params",
    "load_checkpoint",
    "load_corpus",
    "pair_loss",
    "partition_keyphrases",
    "phrases_match",
    "postprocess",
    "prf_at_k",
    "recall_at_k",
    "save_checkpoint",
    "score_phrase",
    "stem_phrase",
    "stem_word",
    "tokenize",
    "train",
]
