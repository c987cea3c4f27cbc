"""Training: batching, the optimization loop, checkpoint persistence."""

from .batching import make_batches, pad_batch
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .loop import TrainConfig, TrainResult, ValidationRecord, corpus_loss, train

__all__ = [
    "Checkpoint",
    "TrainConfig",
    "TrainResult",
    "ValidationRecord",
    "corpus_loss",
    "load_checkpoint",
    "make_batches",
    "pad_batch",
    "save_checkpoint",
    "train",
]
