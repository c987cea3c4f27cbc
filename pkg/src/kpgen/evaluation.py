"""Ranked-keyphrase evaluation with stemmed exact matching.

Present keyphrases (those appearing contiguously in their own source text)
are scored with macro-averaged precision/recall/F1 at rank cutoffs; absent
keyphrases are scored with recall at cutoffs, over predictions that are
themselves absent from the source. Two phrases match when their token
sequences are identical after stemming, so inflectional variants count as
hits but token order still matters.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import UsageError
from .textproc import (
    Document,
    is_subsequence,
    partition_keyphrases,
    stem_phrase,
    tokenize,
)

__all__ = [
    "AbsentMetrics",
    "MetricReport",
    "PresentMetrics",
    "evaluate_corpus",
    "phrases_match",
    "prf_at_k",
    "read_predictions",
    "recall_at_k",
]


def _key(tokens: Sequence[str]) -> tuple[str, ...]:
    return tuple(stem_phrase([t.lower() for t in tokens]))


def phrases_match(a: Sequence[str], b: Sequence[str]) -> bool:
    """True when two token sequences are identical after stemming."""
    return _key(a) == _key(b)


def _correct_matches(taken: list[tuple[str, ...]], gold: list[tuple[str, ...]]) -> int:
    """Matched predictions, each gold phrase creditable at most once."""
    remaining = Counter(gold)
    correct = 0
    for key in taken:
        if remaining[key] > 0:
            remaining[key] -= 1
            correct += 1
    return correct


def _check_inputs(gold, k) -> None:
    if k < 1:
        raise UsageError(f"cutoff k must be >= 1, got {k}")
    if not gold:
        raise UsageError("gold phrase list is empty")


def prf_at_k(predicted: Sequence[Sequence[str]], gold: Sequence[Sequence[str]],
             k: int) -> tuple[float, float, float]:
    """(precision, recall, F1) of the top-k ranked predictions.

    Both arguments are token sequences; matching is stemmed-exact. Precision
    divides by the number of predictions actually taken, recall by the number
    of gold phrases.
    """
    _check_inputs(gold, k)
    taken = [_key(p) for p in predicted[:k]]
    correct = _correct_matches(taken, [_key(g) for g in gold])
    precision = correct / len(taken) if taken else 0.0
    recall = correct / len(gold)
    f1 = 0.0 if precision + recall == 0 else (
        2 * precision * recall / (precision + recall))
    return precision, recall, f1


def recall_at_k(predicted: Sequence[Sequence[str]], gold: Sequence[Sequence[str]],
                k: int) -> float:
    """Matched gold phrases in the top-k predictions over all gold phrases."""
    _check_inputs(gold, k)
    taken = [_key(p) for p in predicted[:k]]
    return _correct_matches(taken, [_key(g) for g in gold]) / len(gold)


@dataclass(frozen=True)
class PresentMetrics:
    precision: float
    recall: float
    f1: float
    documents: int


@dataclass(frozen=True)
class AbsentMetrics:
    recall: float
    documents: int


@dataclass(frozen=True)
class MetricReport:
    """Per-cutoff macro metrics plus how many documents fed each average."""

    present: dict[int, PresentMetrics]
    absent: dict[int, AbsentMetrics]
    total_documents: int

    def to_dict(self) -> dict:
        return {
            "documents": self.total_documents,
            "present": [
                {"k": k, "precision": m.precision, "recall": m.recall,
                 "f1": m.f1, "documents": m.documents}
                for k, m in sorted(self.present.items())
            ],
            "absent": [
                {"k": k, "recall": m.recall, "documents": m.documents}
                for k, m in sorted(self.absent.items())
            ],
        }

    def table(self) -> str:
        lines = [f"documents evaluated: {self.total_documents}", "",
                 "present keyphrases",
                 f"  {'k':>4}  {'precision':>9}  {'recall':>9}  {'f1':>9}  {'docs':>6}"]
        for k, m in sorted(self.present.items()):
            lines.append(f"  {k:>4}  {m.precision:>9.4f}  {m.recall:>9.4f}"
                         f"  {m.f1:>9.4f}  {m.documents:>6}")
        lines += ["", "absent keyphrases",
                  f"  {'k':>4}  {'recall':>9}  {'docs':>6}"]
        for k, m in sorted(self.absent.items()):
            lines.append(f"  {k:>4}  {m.recall:>9.4f}  {m.documents:>6}")
        return "\n".join(lines)


def read_predictions(path) -> list[dict]:
    """Load a prediction file: one {"id", "keyphrases": [{"phrase", "logprob"}]}
    JSON object per line."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise UsageError(f"malformed prediction record on line {lineno}: {exc}")
            if (not isinstance(obj, dict) or not isinstance(obj.get("id"), str)
                    or not isinstance(obj.get("keyphrases"), list)
                    or not all(isinstance(e, dict) and isinstance(e.get("phrase"), str)
                               for e in obj["keyphrases"])):
                raise UsageError(f"prediction record on line {lineno} does not have "
                                 'the {"id", "keyphrases": [{"phrase"}]} shape')
            records.append(obj)
    return records


def evaluate_corpus(predictions: Iterable[dict], documents: Iterable[Document],
                    ks: Sequence[int], stemmed: bool = True,
                    recall_denominator: str = "gold") -> MetricReport:
    """Macro-averaged metrics over a prediction stream.

    ``predictions`` holds prediction-file records; every record id must name
    a document in ``documents``. ``stemmed`` controls how phrases are judged
    present in the source (matching itself is always stemmed). Documents with
    no eligible gold phrases are excluded from that metric's average but still
    counted in the report. ``recall_denominator="corpus"`` switches recall to
    a corpus-pooled denominator (total matches over total gold) for audit;
    precision and F1 always use the per-document definition.
    """
    if not ks:
        raise UsageError("at least one cutoff k is required")
    ks = sorted({int(k) for k in ks})
    if ks[0] < 1:
        raise UsageError(f"cutoff k must be >= 1, got {ks[0]}")
    if recall_denominator not in ("gold", "corpus"):
        raise UsageError(f"unknown recall denominator {recall_denominator!r}; "
                         "expected 'gold' or 'corpus'")
    predictions = list(predictions)
    by_id = {d.id: d for d in documents}
    unknown = sorted({r["id"] for r in predictions} - set(by_id))
    if unknown:
        raise UsageError("prediction ids missing from the corpus: "
                         + ", ".join(unknown))

    present_rows = {k: [] for k in ks}    # (precision, recall, f1) per doc
    absent_rows = {k: [] for k in ks}     # recall per doc
    pooled = {("present", k): [0, 0] for k in ks}  # [correct, gold] totals
    pooled.update({("absent", k): [0, 0] for k in ks})

    for record in predictions:
        doc = by_id[record["id"]]
        pred_tokens = [t for t in (tokenize(e["phrase"]) for e in record["keyphrases"])
                       if t]
        source = doc.source_tokens()
        source_cmp = stem_phrase(source) if stemmed else source

        def judged_present(tokens):
            probe = stem_phrase(tokens) if stemmed else tokens
            return is_subsequence(probe, source_cmp)

        pred_present = [t for t in pred_tokens if judged_present(t)]
        pred_absent = [t for t in pred_tokens if not judged_present(t)]
        part = partition_keyphrases(doc, stemmed=stemmed)
        gold_present = [t for t in map(tokenize, part.present) if t]
        gold_absent = [t for t in map(tokenize, part.absent) if t]

        for k in ks:
            if gold_present:
                present_rows[k].append(prf_at_k(pred_present, gold_present, k))
                pooled[("present", k)][0] += _correct_matches(
                    [_key(p) for p in pred_present[:k]],
                    [_key(g) for g in gold_present])
                pooled[("present", k)][1] += len(gold_present)
            if gold_absent:
                absent_rows[k].append(recall_at_k(pred_absent, gold_absent, k))
                pooled[("absent", k)][0] += _correct_matches(
                    [_key(p) for p in pred_absent[:k]],
                    [_key(g) for g in gold_absent])
                pooled[("absent", k)][1] += len(gold_absent)

    def mean(xs):
        return sum(xs) / len(xs) if xs else 0.0

    present, absent = {}, {}
    for k in ks:
        rows = present_rows[k]
        recall = mean([r for _, r, _ in rows])
        if recall_denominator == "corpus":
            correct, total = pooled[("present", k)]
            recall = correct / total if total else 0.0
        present[k] = PresentMetrics(
            precision=mean([p for p, _, _ in rows]),
            recall=recall,
            f1=mean([f for _, _, f in rows]),
            documents=len(rows),
        )
        a_rows = absent_rows[k]
        a_recall = mean(a_rows)
        if recall_denominator == "corpus":
            correct, total = pooled[("absent", k)]
            a_recall = correct / total if total else 0.0
        absent[k] = AbsentMetrics(recall=a_recall, documents=len(a_rows))
    return MetricReport(present=present, absent=absent,
                        total_documents=len(predictions))
