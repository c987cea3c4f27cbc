"""Training loop: overfit oracle, early stopping, determinism, logging."""

import json
import math

import numpy as np
import pytest

from kpgen.errors import ConfigError, NumericError, UsageError
from kpgen.model import ModelConfig
from kpgen.textproc import Vocabulary, encode_pair
from kpgen.training import TrainConfig, corpus_loss, load_checkpoint, save_checkpoint, train

WORDS = ["cat", "dog", "bird", "runs", "sits", "flies", "fast", "slow", "high"]


@pytest.fixture
def vocab():
    return Vocabulary(WORDS)


def toy_pairs(vocab, n, seed=0):
    """Learnable mapping: target is the source's second and first tokens."""
    r = np.random.default_rng(seed)
    pairs = []
    for _ in range(n):
        src = [WORDS[r.integers(len(WORDS))] for _ in range(4)]
        pairs.append(encode_pair(src, [src[1], src[0]], vocab))
    return pairs


def noise_pairs(vocab, n, seed=100):
    """Unlearnable: targets unrelated to sources."""
    r = np.random.default_rng(seed)
    pairs = []
    for _ in range(n):
        src = [WORDS[r.integers(len(WORDS))] for _ in range(4)]
        tgt = [WORDS[r.integers(len(WORDS))] for _ in range(2)]
        pairs.append(encode_pair(src, tgt, vocab))
    return pairs


def small_model(vocab, **kw):
    base = dict(vocab_size=len(vocab), embedding_dim=8, hidden_dim=12,
                copy_enabled=False, dropout_rate=0.0)
    base.update(kw)
    return ModelConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)
    with pytest.raises(ConfigError):
        TrainConfig(learning_rate=0)
    with pytest.raises(ConfigError):
        TrainConfig(patience=0)
    with pytest.raises(ConfigError):
        TrainConfig(clip_threshold=-1)
    with pytest.raises(ConfigError):
        TrainConfig(validation_interval=0)
    with pytest.raises(ConfigError):
        TrainConfig(dropout_rate=1.0)


def test_empty_sets_rejected(vocab):
    cfg = small_model(vocab)
    tc = TrainConfig(batch_size=2, max_epochs=1)
    with pytest.raises(UsageError):
        train([], toy_pairs(vocab, 3), vocab, cfg, tc)
    with pytest.raises(UsageError):
        train(toy_pairs(vocab, 3), [], vocab, cfg, tc)


def test_overfits_tiny_corpus(vocab):
    pairs = toy_pairs(vocab, 8)
    result = train(
        pairs, pairs, vocab,
        small_model(vocab, embedding_dim=16, hidden_dim=24),
        TrainConfig(batch_size=8, learning_rate=0.01, clip_threshold=5.0,
                    max_epochs=150, patience=150, seed=1))
    losses = [r.val_loss for r in result.history]
    assert losses[1] < losses[0]          # first validations head down
    assert min(losses) < 0.1              # memorized, in nats per token
    assert result.best_val_loss == min(losses)
    assert result.checkpoint.metadata["val_loss"] == pytest.approx(min(losses))


def test_early_stopping_on_worsening_validation(vocab):
    # train targets are learnable, validation targets are noise: validation
    # loss bottoms out and climbs, so patience cuts the run short
    result = train(
        toy_pairs(vocab, 24), noise_pairs(vocab, 12), vocab, small_model(vocab),
        TrainConfig(batch_size=8, learning_rate=0.05, clip_threshold=1.0,
                    max_epochs=200, patience=2, seed=3))
    assert len(result.history) < 200
    losses = [r.val_loss for r in result.history]
    # returned checkpoint is the best one, not the last
    assert result.checkpoint.metadata["val_loss"] == pytest.approx(min(losses))
    assert losses[-1] >= min(losses)
    # the last `patience` validations failed to improve on the best
    assert all(l >= min(losses) for l in losses[-2:])


def test_patience_one_stops_at_first_regression(vocab):
    result = train(
        toy_pairs(vocab, 16), noise_pairs(vocab, 8), vocab, small_model(vocab),
        TrainConfig(batch_size=8, learning_rate=0.05, clip_threshold=1.0,
                    max_epochs=100, patience=1, seed=5))
    losses = [r.val_loss for r in result.history]
    best_idx = int(np.argmin(losses))
    # stops on the first validation that fails to improve
    assert len(losses) == best_idx + 2
    assert result.checkpoint.metadata["step"] == result.history[best_idx].step


def test_determinism_same_seed(vocab):
    pairs = toy_pairs(vocab, 12)
    tc = TrainConfig(batch_size=4, learning_rate=0.01, max_epochs=3,
                     patience=10, seed=42)
    a = train(pairs, pairs, vocab, small_model(vocab), tc)
    b = train(pairs, pairs, vocab, small_model(vocab), tc)
    assert [r.val_loss for r in a.history] == [r.val_loss for r in b.history]
    for name in a.checkpoint.arrays:
        np.testing.assert_array_equal(a.checkpoint.arrays[name], b.checkpoint.arrays[name])


def test_dropout_override_takes_effect(vocab):
    pairs = toy_pairs(vocab, 8)
    base = TrainConfig(batch_size=4, learning_rate=0.01, max_epochs=2, patience=10, seed=7)
    with_do = TrainConfig(batch_size=4, learning_rate=0.01, max_epochs=2, patience=10,
                          seed=7, dropout_rate=0.5)
    a = train(pairs, pairs, vocab, small_model(vocab), base)
    b = train(pairs, pairs, vocab, small_model(vocab), with_do)
    assert b.checkpoint.config.dropout_rate == 0.5
    assert a.history[0].val_loss != b.history[0].val_loss


def test_clipped_fraction_reflects_threshold(vocab):
    pairs = toy_pairs(vocab, 8)
    tight = train(pairs, pairs, vocab, small_model(vocab),
                  TrainConfig(batch_size=4, learning_rate=0.001, clip_threshold=1e-4,
                              max_epochs=1, patience=5, seed=9))
    assert tight.history[0].clipped_fraction == 1.0
    loose = train(pairs, pairs, vocab, small_model(vocab),
                  TrainConfig(batch_size=4, learning_rate=0.001, clip_threshold=1e9,
                              max_epochs=1, patience=5, seed=9))
    assert loose.history[0].clipped_fraction == 0.0


def test_validation_interval_in_batches(vocab):
    pairs = toy_pairs(vocab, 16)  # 4 batches per epoch
    result = train(pairs, pairs, vocab, small_model(vocab),
                   TrainConfig(batch_size=4, learning_rate=0.01, max_epochs=2,
                               patience=100, validation_interval=2, seed=11))
    steps = [r.step for r in result.history]
    assert steps == [2, 4, 6, 8]


def test_log_file_records(vocab, tmp_path):
    pairs = toy_pairs(vocab, 8)
    log = tmp_path / "train.log"
    result = train(pairs, pairs, vocab, small_model(vocab),
                   TrainConfig(batch_size=4, learning_rate=0.01, max_epochs=3,
                               patience=10, seed=13),
                   log_path=log)
    lines = log.read_text().strip().splitlines()
    assert len(lines) == len(result.history)
    for line, rec in zip(lines, result.history):
        obj = json.loads(line)
        assert set(obj) == {"step", "epoch", "train_loss", "val_loss", "lr",
                            "clipped_fraction"}
        assert obj["val_loss"] == pytest.approx(rec.val_loss)
        assert obj["lr"] == 0.01


def test_numeric_blowup_aborts(vocab):
    pairs = toy_pairs(vocab, 8)
    with pytest.raises(NumericError):
        train(pairs, pairs, vocab, small_model(vocab),
              TrainConfig(batch_size=4, learning_rate=1e6, clip_threshold=0.0,
                          max_epochs=5, patience=10, seed=15))


def test_checkpoint_roundtrip_after_training(vocab, tmp_path):
    pairs = toy_pairs(vocab, 8)
    result = train(pairs, pairs, vocab, small_model(vocab),
                   TrainConfig(batch_size=4, learning_rate=0.01, max_epochs=2,
                               patience=10, seed=17))
    path = tmp_path / "m.ckpt"
    save_checkpoint(result.checkpoint, path)
    loaded = load_checkpoint(path)
    got = corpus_loss(loaded.to_params(), pairs, batch_size=4)
    want = corpus_loss(result.checkpoint.to_params(), pairs, batch_size=4)
    assert got == want


def test_corpus_loss_empty_rejected(vocab):
    from kpgen.model import init_params
    params = init_params(small_model(vocab), np.random.default_rng(0))
    with pytest.raises(UsageError):
        corpus_loss(params, [])
