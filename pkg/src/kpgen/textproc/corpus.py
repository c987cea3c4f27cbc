"""Documents, corpus loading, pair construction, copy encoding, phrase partitioning."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from ..errors import UsageError
from .stem import stem_phrase
from .tokenizer import EOS_ID, UNK_ID, tokenize
from .vocab import Vocabulary, count_tokens

# token inserted between title and abstract when forming the source sequence
SOURCE_SEPARATOR = "."


@dataclass
class Document:
    """One record: identifier, title, abstract, author keyphrases."""

    id: str
    title: str
    abstract: str
    keyphrases: list[str] = field(default_factory=list)

    def source_tokens(self) -> list[str]:
        """Title then abstract, joined by a sentence boundary token."""
        title = tokenize(self.title)
        abstract = tokenize(self.abstract)
        if title and abstract:
            return title + [SOURCE_SEPARATOR] + abstract
        return title + abstract


@dataclass
class LoadReport:
    documents: list[Document]
    skipped: int = 0


def _normalize_keywords(raw) -> list[str] | None:
    if raw is None:
        return []
    if isinstance(raw, str):
        return [p.strip() for p in raw.split(";") if p.strip()]
    if isinstance(raw, list) and all(isinstance(p, str) for p in raw):
        return [p.strip() for p in raw if p.strip()]
    return None


def parse_document(line: str, default_id: str) -> Document | None:
    """One JSON line to a Document; None if the record is malformed."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError:
        return None
    if not isinstance(obj, dict):
        return None
    title = obj.get("title")
    abstract = obj.get("abstract")
    if not isinstance(title, str) or not isinstance(abstract, str):
        return None
    keyphrases = _normalize_keywords(obj.get("keywords"))
    if keyphrases is None:
        return None
    doc_id = obj.get("id")
    if doc_id is None:
        doc_id = default_id
    return Document(id=str(doc_id), title=title, abstract=abstract, keyphrases=keyphrases)


def load_corpus(path: str | Path) -> LoadReport:
    """Read a JSON-lines corpus; malformed lines are skipped and counted."""
    documents = []
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            doc = parse_document(line, default_id=f"line-{lineno}")
            if doc is None:
                skipped += 1
            else:
                documents.append(doc)
    return LoadReport(documents=documents, skipped=skipped)


def save_corpus(documents: Iterable[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in documents:
            record = {
                "id": doc.id,
                "title": doc.title,
                "abstract": doc.abstract,
                "keywords": doc.keyphrases,
            }
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def build_vocabulary(documents: Iterable[Document], max_size: int,
                     include_keyphrases: bool = True) -> Vocabulary:
    """Frequency-ranked vocabulary over source (and by default keyphrase) tokens."""
    def streams():
        for doc in documents:
            yield doc.source_tokens()
            if include_keyphrases:
                for phrase in doc.keyphrases:
                    yield tokenize(phrase)
    counts = count_tokens(streams())
    if not counts:
        raise UsageError("corpus produced no tokens; cannot build a vocabulary")
    return Vocabulary.from_counts(counts, max_size)


def split_pairs(doc: Document) -> list[tuple[list[str], list[str]]]:
    """One (source tokens, keyphrase tokens) pair per keyphrase.

    Keyphrases that tokenize to nothing are dropped.
    """
    source = doc.source_tokens()
    pairs = []
    for phrase in doc.keyphrases:
        target = tokenize(phrase)
        if target:
            pairs.append((source, target))
    return pairs


@dataclass
class EncodedPair:
    """A (source, target) pair in id space, with this pair's copy vocabulary.

    Source out-of-vocabulary words get temporary ids len(vocab) + k, in order
    of first appearance; the k-th entry of oov_words maps id len(vocab) + k
    back to its word. target_ids use those extended ids for target words that
    appear in the source but not the vocabulary, and end with <eos>.
    """

    source_ids: list[int]
    source_extended_ids: list[int]
    oov_words: list[str]
    target_ids: list[int]


def encode_pair(source_tokens: list[str], target_tokens: list[str],
                vocab: Vocabulary) -> EncodedPair:
    base = len(vocab)
    source_ids = []
    source_extended_ids = []
    oov_words: list[str] = []
    oov_index: dict[str, int] = {}
    for tok in source_tokens:
        idx = vocab.id_of(tok)
        source_ids.append(idx)
        if idx != UNK_ID:
            source_extended_ids.append(idx)
        else:
            k = oov_index.setdefault(tok, len(oov_words))
            if k == len(oov_words):
                oov_words.append(tok)
            source_extended_ids.append(base + k)
    target_ids = []
    for tok in target_tokens:
        idx = vocab.id_of(tok)
        if idx == UNK_ID and tok in oov_index:
            idx = base + oov_index[tok]
        target_ids.append(idx)
    target_ids.append(EOS_ID)
    return EncodedPair(source_ids, source_extended_ids, oov_words, target_ids)


def decode_extended(ids: Iterable[int], vocab: Vocabulary, oov_words: list[str]) -> list[str]:
    """Inverse of the extended encoding, for ids from one pair's copy vocabulary."""
    base = len(vocab)
    out = []
    for i in ids:
        if i < base:
            out.append(vocab.word_of(i))
        elif i - base < len(oov_words):
            out.append(oov_words[i - base])
        else:
            raise UsageError(f"extended id {i} beyond this pair's copy vocabulary")
    return out


@dataclass
class PhrasePartition:
    present: list[str]
    absent: list[str]


def is_subsequence(needle: list[str], haystack: list[str]) -> bool:
    """True when needle occurs contiguously inside haystack."""
    n, h = len(needle), len(haystack)
    if n == 0 or n > h:
        return False
    return any(haystack[i:i + n] == needle for i in range(h - n + 1))


def partition_keyphrases(doc: Document, stemmed: bool = True) -> PhrasePartition:
    """Split keyphrases into present/absent by contiguous match against the source.

    Matching compares stemmed tokens by default so inflectional variants
    count as occurrences; stemmed=False compares raw tokens. Phrases that
    tokenize to nothing are classified absent.
    """
    source = doc.source_tokens()
    if stemmed:
        source = stem_phrase(source)
    present, absent = [], []
    for phrase in doc.keyphrases:
        tokens = tokenize(phrase)
        if stemmed:
            tokens = stem_phrase(tokens)
        (present if is_subsequence(tokens, source) else absent).append(phrase)
    return PhrasePartition(present=present, absent=absent)


def present_proportion(documents: Iterable[Document], stemmed: bool = True) -> float:
    """Fraction of all keyphrases that appear in their own source text."""
    n_present = 0
    n_total = 0
    for doc in documents:
        part = partition_keyphrases(doc, stemmed=stemmed)
        n_present += len(part.present)
        n_total += len(part.present) + len(part.absent)
    if n_total == 0:
        raise UsageError("no keyphrases in corpus")
    return n_present / n_total
