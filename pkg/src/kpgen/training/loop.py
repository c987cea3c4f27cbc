"""Training loop: Adam over batched teacher-forced loss, early stopping on validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np

from ..errors import ConfigError, NumericError, UsageError
from ..model import ModelConfig, ModelParams, batch_losses, init_params
from ..numerics import Adam, Tape, clip_gradients
from ..numerics import tensor as T
from ..textproc import EncodedPair, Vocabulary
from .batching import make_batches
from .checkpoint import Checkpoint


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; dropout_rate, when set, overrides the model's."""

    batch_size: int = 64
    learning_rate: float = 1e-4
    clip_threshold: float = 0.1
    dropout_rate: float | None = None
    max_epochs: int = 10
    patience: int = 3
    validation_interval: int | None = None  # batches between validations; None = per epoch
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.clip_threshold < 0:
            raise ConfigError(f"clip_threshold must be >= 0, got {self.clip_threshold}")
        if self.dropout_rate is not None and not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.validation_interval is not None and self.validation_interval < 1:
            raise ConfigError("validation_interval must be >= 1 when set")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class ValidationRecord:
    """One early-stopping checkpoint decision, also the JSON log line."""

    step: int
    epoch: int
    train_loss: float  # mean nats per target token since the last validation
    val_loss: float    # mean nats per target token over the validation set
    lr: float
    clipped_fraction: float

    def to_json(self) -> str:
        return json.dumps(
            {"step": self.step, "epoch": self.epoch, "train_loss": self.train_loss,
             "val_loss": self.val_loss, "lr": self.lr,
             "clipped_fraction": self.clipped_fraction},
            sort_keys=True)


@dataclass
class TrainResult:
    checkpoint: Checkpoint        # parameters at the best validation loss
    history: list[ValidationRecord] = field(default_factory=list)

    @property
    def best_val_loss(self) -> float:
        return min(r.val_loss for r in self.history)


def corpus_loss(params: ModelParams, pairs: list[EncodedPair], batch_size: int = 64) -> float:
    """Mean negative log-likelihood per target token, dropout off."""
    if not pairs:
        raise UsageError("cannot evaluate loss on an empty pair set")
    total_nll = 0.0
    total_tokens = 0
    for batch in make_batches(pairs, batch_size):
        losses = batch_losses(params, batch, training=False)
        total_nll += float(losses.values.sum())
        total_tokens += int(batch.tgt_mask.sum())
    return total_nll / total_tokens


def train(train_pairs: list[EncodedPair], val_pairs: list[EncodedPair],
          vocab: Vocabulary, model_config: ModelConfig, train_config: TrainConfig,
          log_path: str | Path | None = None,
          on_validation: Callable[[ValidationRecord], None] | None = None,
          ) -> TrainResult:
    """Optimize until validation loss stops improving for `patience` checks.

    Per batch: forward, backward, global-norm clip, Adam step. Validation
    runs every validation_interval batches (default: each epoch end) plus
    once at the very end; the checkpoint with the lowest validation loss is
    returned. A non-finite training loss aborts with the batch identified.
    """
    if not train_pairs or not val_pairs:
        raise UsageError("training and validation sets must both be non-empty")
    if train_config.dropout_rate is not None:
        model_config = ModelConfig.from_dict(
            {**model_config.to_dict(), "dropout_rate": train_config.dropout_rate})

    seeds = np.random.SeedSequence(train_config.seed).spawn(3)
    init_rng, shuffle_rng, dropout_rng = (np.random.default_rng(s) for s in seeds)
    params = init_params(model_config, init_rng)
    tensors = params.tensors()
    opt = Adam(tensors, lr=train_config.learning_rate)

    log_fh = open(log_path, "w", encoding="utf-8") if log_path is not None else None
    history: list[ValidationRecord] = []
    best: Checkpoint | None = None
    best_val = math.inf
    bad_validations = 0
    step = 0
    # accumulators since the last validation
    window_nll = 0.0
    window_tokens = 0
    window_batches = 0
    window_clipped = 0

    def validate(epoch: int) -> bool:
        """Record one validation; True when training should stop."""
        nonlocal best, best_val, bad_validations
        nonlocal window_nll, window_tokens, window_batches, window_clipped
        val_loss = corpus_loss(params, val_pairs, train_config.batch_size)
        record = ValidationRecord(
            step=step, epoch=epoch,
            train_loss=(window_nll / window_tokens) if window_tokens else math.nan,
            val_loss=val_loss, lr=train_config.learning_rate,
            clipped_fraction=(window_clipped / window_batches) if window_batches else 0.0,
        )
        history.append(record)
        if log_fh is not None:
            log_fh.write(record.to_json() + "\n")
            log_fh.flush()
        if on_validation is not None:
            on_validation(record)
        window_nll = 0.0
        window_tokens = 0
        window_batches = 0
        window_clipped = 0
        if val_loss < best_val:
            best_val = val_loss
            best = Checkpoint.from_params(
                params, vocab,
                metadata={"epoch": epoch, "step": step, "val_loss": val_loss,
                          "seed": train_config.seed})
            bad_validations = 0
            return False
        bad_validations += 1
        return bad_validations >= train_config.patience

    try:
        stop = False
        epoch = 0
        for epoch in range(1, train_config.max_epochs + 1):
            for batch in make_batches(train_pairs, train_config.batch_size, shuffle_rng):
                step += 1
                opt.zero_grad()
                with Tape() as tape:
                    losses = batch_losses(params, batch, training=True, rng=dropout_rng)
                    total = T.tensor_sum(losses)
                if not math.isfinite(total.item()):
                    raise NumericError(
                        f"non-finite training loss at step {step} (epoch {epoch})")
                tape.backward(total)
                grads = [t.grad for t in tensors if t.grad is not None]
                _, norm = clip_gradients(grads, train_config.clip_threshold)
                if train_config.clip_threshold > 0 and norm > train_config.clip_threshold:
                    window_clipped += 1
                opt.step()
                window_nll += float(losses.values.sum())
                window_tokens += int(batch.tgt_mask.sum())
                window_batches += 1
                if (train_config.validation_interval is not None
                        and step % train_config.validation_interval == 0):
                    stop = validate(epoch)
                    if stop:
                        break
            if stop:
                break
            if train_config.validation_interval is None:
                stop = validate(epoch)
                if stop:
                    break
        if window_batches > 0 or not history:
            validate(epoch)
    finally:
        if log_fh is not None:
            log_fh.close()

    assert best is not None
    return TrainResult(checkpoint=best, history=history)
