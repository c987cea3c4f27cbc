"""Frequency-ranked vocabulary with fixed reserved ids."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Mapping

from ..errors import ConfigError, UsageError
from .tokenizer import RESERVED_TOKENS, UNK_ID


class Vocabulary:
    """Bijective word/id maps; reserved tokens hold the lowest ids.

    Regular words occupy ids [len(reserved), len(reserved) + max_size).
    """

    def __init__(self, words: Iterable[str]):
        self._id_to_word = list(RESERVED_TOKENS)
        seen = set(self._id_to_word)
        for w in words:
            if w in seen:
                raise UsageError(f"duplicate vocabulary word: {w!r}")
            seen.add(w)
            self._id_to_word.append(w)
        self._word_to_id = {w: i for i, w in enumerate(self._id_to_word)}

    @classmethod
    def from_counts(cls, counts: Mapping[str, int], max_size: int) -> "Vocabulary":
        """Keep the max_size most frequent words; ties go to the lexicographically smaller."""
        if max_size < 1:
            raise ConfigError(f"max_size must be >= 1, got {max_size}")
        if not counts:
            raise UsageError("cannot build a vocabulary from an empty corpus")
        candidates = [w for w in counts if w not in RESERVED_TOKENS]
        candidates.sort(key=lambda w: (-counts[w], w))
        return cls(candidates[:max_size])

    def __len__(self) -> int:
        return len(self._id_to_word)

    def __contains__(self, word: str) -> bool:
        return word in self._word_to_id

    def id_of(self, word: str) -> int:
        """Id of a word, or the <unk> id if it is out of vocabulary."""
        return self._word_to_id.get(word, UNK_ID)

    def word_of(self, idx: int) -> str:
        if not 0 <= idx < len(self._id_to_word):
            raise UsageError(f"id {idx} outside vocabulary of size {len(self)}")
        return self._id_to_word[idx]

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.id_of(t) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.word_of(i) for i in ids]

    @property
    def words(self) -> list[str]:
        return list(self._id_to_word)

    def to_list(self) -> list[str]:
        """Non-reserved words in id order, for serialization."""
        return self._id_to_word[len(RESERVED_TOKENS):]

    @classmethod
    def from_list(cls, words: Iterable[str]) -> "Vocabulary":
        return cls(words)


def count_tokens(token_streams: Iterable[Iterable[str]]) -> Counter:
    counts: Counter = Counter()
    for tokens in token_streams:
        counts.update(tokens)
    return counts
