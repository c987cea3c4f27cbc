"""Batching: partition sizes, padding equivalence against per-pair losses, determinism."""

import numpy as np
import pytest

from kpgen.errors import ConfigError
from kpgen.model import ModelConfig, batch_losses, init_params, pair_loss
from kpgen.textproc import BOS_ID, EOS_ID, PAD_ID, Vocabulary, encode_pair
from kpgen.training import make_batches, pad_batch

WORDS = ["cat", "sat", "mat", "dog", "ran", "far"]


@pytest.fixture
def vocab():
    return Vocabulary(WORDS)


def random_pairs(vocab, n, seed=0, oov_pool=("wug", "blik", "zorp")):
    r = np.random.default_rng(seed)
    pool = WORDS + list(oov_pool)
    pairs = []
    for _ in range(n):
        src = [pool[r.integers(len(pool))] for _ in range(int(r.integers(2, 9)))]
        tgt = [pool[r.integers(len(pool))] for _ in range(int(r.integers(1, 4)))]
        pairs.append(encode_pair(src, tgt, vocab))
    return pairs


def test_ten_pairs_batch_four_sizes(vocab):
    pairs = random_pairs(vocab, 10)
    batches = make_batches(pairs, 4, np.random.default_rng(1))
    assert [b.size for b in batches] == [4, 4, 2]


def test_epoch_covers_every_pair_once(vocab):
    pairs = random_pairs(vocab, 23)
    batches = make_batches(pairs, 5, np.random.default_rng(2))
    assert sum(b.size for b in batches) == 23
    # identify pairs by their unpadded source row
    seen = []
    for b in batches:
        for row, mask in zip(b.src_ids, b.src_mask):
            seen.append(tuple(row[mask.astype(bool)]))
    want = sorted(tuple(p.source_ids) for p in pairs)
    assert sorted(seen) == want


def test_same_seed_same_batches(vocab):
    pairs = random_pairs(vocab, 17)
    a = make_batches(pairs, 4, np.random.default_rng(7))
    b = make_batches(pairs, 4, np.random.default_rng(7))
    assert len(a) == len(b)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.src_ids, y.src_ids)
        np.testing.assert_array_equal(x.tgt_out, y.tgt_out)


def test_different_seed_different_order(vocab):
    pairs = random_pairs(vocab, 40)
    a = make_batches(pairs, 4, np.random.default_rng(1))
    b = make_batches(pairs, 4, np.random.default_rng(2))
    assert any(
        x.src_ids.shape != y.src_ids.shape or not np.array_equal(x.src_ids, y.src_ids)
        for x, y in zip(a, b))


def test_bucketing_limits_padding(vocab):
    # lengths 2..8 in random order: sorted grouping wastes little padding
    pairs = random_pairs(vocab, 30)
    batches = make_batches(pairs, 5, np.random.default_rng(3))
    waste = sum(int((1 - b.src_mask).sum()) for b in batches)
    cells = sum(b.src_mask.size for b in batches)
    assert waste / cells < 0.25


def test_pad_batch_layout(vocab):
    pairs = [encode_pair(["cat", "wug"], ["wug"], vocab),
             encode_pair(["sat"], ["cat", "mat"], vocab)]
    batch = pad_batch(pairs)
    assert batch.src_ids.shape == (2, 2)
    assert batch.src_ids[1, 1] == PAD_ID
    assert batch.src_mask[1, 1] == 0.0
    assert batch.tgt_in[0, 0] == BOS_ID
    assert batch.tgt_out[0, 0] == len(vocab)  # extended id for wug
    assert batch.tgt_out[1, 2] == EOS_ID
    assert batch.n_oov == 1


def test_empty_batch_rejected():
    with pytest.raises(ConfigError):
        pad_batch([])
    assert make_batches([], 4) == []


def test_bad_batch_size(vocab):
    with pytest.raises(ConfigError):
        make_batches(random_pairs(vocab, 3), 0)


@pytest.mark.parametrize("copy_enabled", [True, False])
def test_padded_batch_loss_equals_per_pair_sum(vocab, copy_enabled):
    cfg = ModelConfig(vocab_size=len(vocab), embedding_dim=4, hidden_dim=5,
                      copy_enabled=copy_enabled, dropout_rate=0.0)
    params = init_params(cfg, np.random.default_rng(5))
    pairs = random_pairs(vocab, 7, seed=11)
    batch = pad_batch(pairs)
    batched = batch_losses(params, batch).values
    singles = np.array([pair_loss(params, p).item() for p in pairs])
    np.testing.assert_allclose(batched, singles, atol=1e-8)
    assert abs(batched.sum() - singles.sum()) < 1e-8


def test_batch_loss_permutation_invariant(vocab):
    cfg = ModelConfig(vocab_size=len(vocab), embedding_dim=4, hidden_dim=5,
                      dropout_rate=0.0)
    params = init_params(cfg, np.random.default_rng(6))
    pairs = random_pairs(vocab, 6, seed=12)
    fwd = batch_losses(params, pad_batch(pairs)).values
    rev = batch_losses(params, pad_batch(pairs[::-1])).values
    np.testing.assert_allclose(fwd, rev[::-1], atol=1e-10)
    assert fwd.sum() == pytest.approx(rev.sum(), abs=1e-10)
