"""Command-line pipeline: preprocess, train, predict, eval, stats.

Every command writes a ``manifest.json`` into its output directory —
effective configuration, SHA-256 of each input, artifact version — so a run
can be reproduced from the manifest alone. Outputs carry no timestamps:
rerunning a command on identical inputs produces byte-identical files.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import multiprocessing
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .decoding import BeamConfig, beam_search, postprocess, prediction_record
from .errors import KpgenError, UsageError
from .evaluation import evaluate_corpus, read_predictions
from .runconfig import RunConfig, parse_bool, parse_ks
from .textproc import (
    UNK_ID,
    EncodedPair,
    Vocabulary,
    build_vocabulary,
    encode_pair,
    load_corpus,
    partition_keyphrases,
    split_pairs,
)
from .training import load_checkpoint, save_checkpoint, train

SHARD_SIZE = 100_000


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


def _write_manifest(out_dir: Path, command: str, cfg: RunConfig,
                    inputs: dict[str, Path | str], outputs: list[str]) -> None:
    _write_json(out_dir / "manifest.json", {
        "artifact": {"name": "kpgen", "version": __version__},
        "command": command,
        "config": cfg.to_dict(),
        "inputs": {label: {"path": str(path), "sha256": _sha256(Path(path))}
                   for label, path in sorted(inputs.items())},
        "outputs": sorted(outputs),
    })


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _out_dir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


# command-line flag -> (section, key) in RunConfig
_FLAG_DESTS = {
    "vocab_size": ("run", "vocab_size"),
    "val_fraction": ("run", "val_fraction"),
    "seed": ("run", "seed"),
    "workers": ("run", "workers"),
    "ks": ("run", "ks"),
    "embedding_dim": ("model", "embedding_dim"),
    "hidden_dim": ("model", "hidden_dim"),
    "copy": ("model", "copy_enabled"),
    "dropout": ("model", "dropout_rate"),
    "batch_size": ("training", "batch_size"),
    "lr": ("training", "learning_rate"),
    "clip": ("training", "clip_threshold"),
    "patience": ("training", "patience"),
    "max_epochs": ("training", "max_epochs"),
    "validation_interval": ("training", "validation_interval"),
    "beam_size": ("beam", "beam_size"),
    "max_depth": ("beam", "max_depth"),
    "top_k": ("beam", "count"),
}


def _run_config(args) -> RunConfig:
    overrides = {}
    for dest, target in _FLAG_DESTS.items():
        if hasattr(args, dest):
            overrides[target] = getattr(args, dest)
    return RunConfig.load(getattr(args, "config", None), overrides)


# --- preprocess --------------------------------------------------------------

def _pair_line(doc_id: str, pair: EncodedPair) -> str:
    return json.dumps({
        "id": doc_id,
        "source": pair.source_ids,
        "source_extended": pair.source_extended_ids,
        "oov": pair.oov_words,
        "target": pair.target_ids,
    }, sort_keys=True, separators=(",", ":"))


def cmd_preprocess(args) -> int:
    cfg = _run_config(args)
    report = load_corpus(args.input)
    if report.skipped:
        _warn(f"skipped {report.skipped} malformed corpus lines")
    docs = report.documents
    if not docs:
        raise UsageError("no usable documents in the input corpus")
    out_dir = _out_dir(args)

    n_val = 0
    if cfg.run["val_fraction"] > 0 and len(docs) >= 2:
        n_val = int(round(cfg.run["val_fraction"] * len(docs)))
        n_val = min(max(n_val, 1), len(docs) - 1)
    order = np.random.default_rng(cfg.run["seed"]).permutation(len(docs))
    val_docs = [docs[i] for i in sorted(order[:n_val])]
    train_docs = [docs[i] for i in sorted(order[n_val:])]

    vocab = build_vocabulary(train_docs, cfg.run["vocab_size"])
    _write_json(out_dir / "vocab.json", vocab.to_list())

    total = oov = empty_source = 0

    def encode_docs(doc_list):
        nonlocal total, oov, empty_source
        for doc in doc_list:
            if not doc.source_tokens():
                empty_source += 1
                continue
            for source, target in split_pairs(doc):
                pair = encode_pair(source, target, vocab)
                total += 1
                if any(t == UNK_ID or t >= len(vocab) for t in pair.target_ids):
                    oov += 1
                yield _pair_line(doc.id, pair)

    shards: list[str] = []
    fh = None
    train_pairs = 0
    try:
        for line in encode_docs(train_docs):
            if train_pairs % SHARD_SIZE == 0:
                if fh:
                    fh.close()
                shards.append(f"pairs-{len(shards):05d}.jsonl")
                fh = open(out_dir / shards[-1], "w", encoding="utf-8")
            fh.write(line + "\n")
            train_pairs += 1
    finally:
        if fh:
            fh.close()

    val_pairs = 0
    outputs = ["vocab.json", "stats.json", *shards]
    if val_docs:
        with open(out_dir / "val.jsonl", "w", encoding="utf-8") as fh:
            for line in encode_docs(val_docs):
                fh.write(line + "\n")
                val_pairs += 1
        outputs.append("val.jsonl")

    if empty_source:
        _warn(f"{empty_source} documents have no source text; their pairs "
              "were dropped")
    _write_json(out_dir / "stats.json", {
        "documents": len(docs),
        "documents_skipped": report.skipped,
        "documents_empty_source": empty_source,
        "documents_train": len(train_docs),
        "documents_val": len(val_docs),
        "pairs": total,
        "pairs_train": train_pairs,
        "pairs_val": val_pairs,
        "oov_keyphrases": oov,
        "oov_keyphrase_rate": oov / total if total else 0.0,
        "vocabulary_size": len(vocab),
    })
    _write_manifest(out_dir, "preprocess", cfg, {"corpus": args.input}, outputs)
    print(f"documents: {len(docs)} ({len(train_docs)} train, {len(val_docs)} validation)")
    rate = oov / total if total else 0.0
    print(f"pairs: {total} ({oov} with out-of-vocabulary words, {rate:.2%})")
    print(f"vocabulary: {len(vocab)} entries")
    print(f"dataset written to {out_dir}")
    return 0


# --- train --------------------------------------------------------------------

def _load_pairs_file(path: Path) -> list[EncodedPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                pairs.append(EncodedPair(
                    source_ids=[int(t) for t in obj["source"]],
                    source_extended_ids=[int(t) for t in obj["source_extended"]],
                    oov_words=[str(w) for w in obj["oov"]],
                    target_ids=[int(t) for t in obj["target"]],
                ))
            except (KeyError, TypeError, ValueError) as exc:
                raise UsageError(
                    f"malformed encoded pair on line {lineno} of {path}: {exc}")
    return pairs


def cmd_train(args) -> int:
    cfg = _run_config(args)
    data_dir = Path(args.input)
    vocab_path = data_dir / "vocab.json"
    if not vocab_path.is_file():
        raise UsageError(f"{data_dir} is not a preprocessed dataset "
                         "(vocab.json missing)")
    vocab = Vocabulary.from_list(json.loads(vocab_path.read_text(encoding="utf-8")))
    shard_paths = sorted(data_dir.glob("pairs-*.jsonl"))
    train_pairs = [p for shard in shard_paths for p in _load_pairs_file(shard)]
    if not train_pairs:
        raise UsageError("dataset contains no training pairs")
    val_path = data_dir / "val.jsonl"
    val_pairs = _load_pairs_file(val_path) if val_path.is_file() else []
    if not val_pairs:
        raise UsageError("dataset contains no validation pairs; rerun "
                         "preprocess with --val-fraction > 0")

    out_dir = _out_dir(args)
    result = train(train_pairs, val_pairs, vocab, cfg.model_config(len(vocab)),
                   cfg.train_config(), log_path=out_dir / "train.log.jsonl")
    save_checkpoint(result.checkpoint, out_dir / "model.ckpt")
    inputs = {"vocab": vocab_path, "val": val_path,
              **{p.name: p for p in shard_paths}}
    _write_manifest(out_dir, "train", cfg, inputs,
                    ["model.ckpt", "train.log.jsonl"])
    meta = result.checkpoint.metadata
    print(f"trained on {len(train_pairs)} pairs, validated on {len(val_pairs)}")
    print(f"best validation loss {meta['val_loss']:.4f} nats/token "
          f"at step {meta['step']} (epoch {meta['epoch']})")
    print(f"checkpoint written to {out_dir / 'model.ckpt'}")
    return 0


# --- predict --------------------------------------------------------------------

_WORKER: dict = {}


def _predict_init(checkpoint_path, search_fields: dict, top_k: int) -> None:
    ckpt = load_checkpoint(checkpoint_path)
    _WORKER["params"] = ckpt.to_params()
    _WORKER["vocab"] = ckpt.vocabulary()
    _WORKER["search"] = BeamConfig(**search_fields)
    _WORKER["top_k"] = top_k


def _predict_one(task: tuple[str, list[str]]) -> dict:
    doc_id, tokens = task
    pair = encode_pair(tokens, [], _WORKER["vocab"])
    ranked = postprocess(beam_search(_WORKER["params"], pair, _WORKER["vocab"],
                                     _WORKER["search"]))
    return prediction_record(doc_id, ranked[: _WORKER["top_k"]])


def cmd_predict(args) -> int:
    cfg = _run_config(args)
    report = load_corpus(args.input)
    if report.skipped:
        _warn(f"skipped {report.skipped} malformed corpus lines")
    docs = report.documents
    if not docs:
        raise UsageError("no usable documents in the input corpus")
    ckpt = load_checkpoint(args.checkpoint)
    if args.vocab is not None:
        words = json.loads(Path(args.vocab).read_text(encoding="utf-8"))
        if words != ckpt.vocab_words:
            raise UsageError(f"vocabulary file {args.vocab} does not match the "
                             "checkpoint's vocabulary")

    beam = cfg.beam_config()
    # collect every hypothesis the beam can finish, dedup, then cut to top-k
    search = dataclasses.replace(beam, count=beam.beam_size * beam.max_depth)
    records: dict[str, dict] = {}
    tasks = []
    for doc in docs:
        tokens = doc.source_tokens()
        if tokens:
            tasks.append((doc.id, tokens))
        else:
            records[doc.id] = prediction_record(doc.id, [])
    if len(tasks) < len(docs):
        _warn(f"{len(docs) - len(tasks)} documents have no source text; "
              "emitting empty predictions for them")

    workers = cfg.run["workers"]
    search_fields = dataclasses.asdict(search)
    if workers == 1 or len(tasks) <= 1:
        _predict_init(args.checkpoint, search_fields, beam.count)
        results = [_predict_one(task) for task in tasks]
    else:
        try:
            ctx = multiprocessing.get_context("fork")
        except ValueError:
            ctx = multiprocessing.get_context()
        with ctx.Pool(workers, initializer=_predict_init,
                      initargs=(args.checkpoint, search_fields, beam.count)) as pool:
            results = pool.map(_predict_one, tasks)
    records.update((rec["id"], rec) for rec in results)

    out_dir = _out_dir(args)
    with open(out_dir / "predictions.jsonl", "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(records[doc.id], sort_keys=True) + "\n")
    inputs = {"corpus": args.input, "checkpoint": args.checkpoint}
    if args.vocab is not None:
        inputs["vocab"] = args.vocab
    _write_manifest(out_dir, "predict", cfg, inputs, ["predictions.jsonl"])
    print(f"predicted keyphrases for {len(docs)} documents")
    print(f"predictions written to {out_dir / 'predictions.jsonl'}")
    return 0


# --- eval -----------------------------------------------------------------------

def cmd_eval(args) -> int:
    cfg = _run_config(args)
    predictions = read_predictions(args.input)
    gold = load_corpus(args.gold)
    if gold.skipped:
        _warn(f"skipped {gold.skipped} malformed corpus lines")
    metrics = evaluate_corpus(predictions, gold.documents, cfg.run["ks"],
                              stemmed=(args.matching == "stemmed"),
                              recall_denominator=args.recall_denominator)
    print(metrics.table())
    if args.output is not None:
        out_dir = _out_dir(args)
        _write_json(out_dir / "report.json", metrics.to_dict())
        _write_manifest(out_dir, "eval", cfg,
                        {"predictions": args.input, "gold": args.gold},
                        ["report.json"])
    return 0


# --- stats ----------------------------------------------------------------------

def cmd_stats(args) -> int:
    cfg = _run_config(args)
    report = load_corpus(args.input)
    if report.skipped:
        _warn(f"skipped {report.skipped} malformed corpus lines")
    docs = report.documents
    if not docs:
        raise UsageError("no usable documents in the input corpus")
    labeled = [d for d in docs if d.keyphrases]
    present = absent = 0
    for doc in labeled:
        part = partition_keyphrases(doc, stemmed=(args.matching == "stemmed"))
        present += len(part.present)
        absent += len(part.absent)
    total = present + absent

    lines = [f"corpus statistics ({args.matching} matching)",
             f"  documents            {len(docs):>8}",
             f"  without keyphrases   {len(docs) - len(labeled):>8}",
             f"  skipped lines        {report.skipped:>8}",
             f"  keyphrases           {total:>8}"]
    if total:
        lines.append(f"  present              {present:>8}  {present / total:>7.2%}")
        lines.append(f"  absent               {absent:>8}  {absent / total:>7.2%}")
    print("\n".join(lines))

    if args.output is not None:
        out_dir = _out_dir(args)
        _write_json(out_dir / "stats.json", {
            "documents": len(docs),
            "documents_without_keyphrases": len(docs) - len(labeled),
            "skipped_lines": report.skipped,
            "keyphrases": total,
            "present": present,
            "absent": absent,
            "present_rate": present / total if total else 0.0,
            "absent_rate": absent / total if total else 0.0,
            "matching": args.matching,
        })
        _write_manifest(out_dir, "stats", cfg, {"corpus": args.input},
                        ["stats.json"])
    return 0


# --- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kpgen",
        description="Generate keyphrases for scientific text with an "
                    "attention/copy encoder-decoder.")
    parser.add_argument("--version", action="version",
                        version=f"kpgen {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None,
                       help="INI settings file ([model]/[training]/[beam]/[run]); "
                            "flags override it")
        return p

    p = add("preprocess", "tokenize a corpus, build the vocabulary, encode pairs")
    p.add_argument("--input", required=True, help="corpus JSON-lines file")
    p.add_argument("--output", required=True, help="dataset directory to create")
    p.add_argument("--vocab-size", dest="vocab_size", type=int)
    p.add_argument("--val-fraction", dest="val_fraction", type=float,
                   help="fraction of documents held out for validation")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_preprocess)

    p = add("train", "train a model on a preprocessed dataset")
    p.add_argument("--input", required=True, help="dataset directory")
    p.add_argument("--output", required=True, help="run output directory")
    p.add_argument("--embedding-dim", dest="embedding_dim", type=int)
    p.add_argument("--hidden-dim", dest="hidden_dim", type=int)
    p.add_argument("--copy", type=parse_bool,
                   help="enable the copy path (true/false)")
    p.add_argument("--dropout", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--clip", type=float)
    p.add_argument("--patience", type=int)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--validation-interval", dest="validation_interval", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = add("predict", "beam-search keyphrases for a corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="corpus JSON-lines file")
    p.add_argument("--output", required=True, help="run output directory")
    p.add_argument("--vocab", default=None,
                   help="vocab.json to cross-check against the checkpoint")
    p.add_argument("--beam-size", dest="beam_size", type=int)
    p.add_argument("--max-depth", dest="max_depth", type=int)
    p.add_argument("--top-k", dest="top_k", type=int,
                   help="phrases kept per document after post-processing")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_predict)

    p = add("eval", "score a predictions file against a gold corpus")
    p.add_argument("--input", required=True, help="predictions JSON-lines file")
    p.add_argument("--gold", required=True, help="gold corpus JSON-lines file")
    p.add_argument("--output", default=None, help="directory for report.json")
    p.add_argument("--ks", type=parse_ks, help="cutoffs, e.g. 5,10,50")
    p.add_argument("--matching", choices=("stemmed", "raw"), default="stemmed",
                   help="how phrases are judged present in the source")
    p.add_argument("--recall-denominator", choices=("gold", "corpus"),
                   default="gold")
    p.set_defaults(func=cmd_eval)

    p = add("stats", "present/absent keyphrase proportions of a corpus")
    p.add_argument("--input", required=True, help="corpus JSON-lines file")
    p.add_argument("--output", default=None, help="directory for stats.json")
    p.add_argument("--matching", choices=("stemmed", "raw"), default="raw")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KpgenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
