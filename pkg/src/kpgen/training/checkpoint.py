"""Versioned binary checkpoints: JSON header plus little-endian float32 payload.

Layout:

    bytes 0..9    magic "KPGENCKPT\\0"
    bytes 10..13  format version, uint32 LE
    bytes 14..21  header length N, uint64 LE
    N bytes       UTF-8 JSON: config, vocabulary, metadata, array directory
    rest          the arrays' float32 data, concatenated in directory order

Arrays are stored float32; reading back widens to float64, so a loaded
model reproduces the stored model exactly (float32 values are exact in
float64). Saving what was loaded reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import (
    CheckpointError,
    CheckpointShapeError,
    CheckpointTruncatedError,
    CheckpointVersionError,
)
from ..model import ModelConfig, ModelParams, init_params
from ..textproc import Vocabulary

MAGIC = b"KPGENCKPT\x00"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    """A trained model frozen to float32: config, vocabulary, arrays, run metadata."""

    config: ModelConfig
    vocab_words: list[str]              # non-reserved words in id order
    arrays: dict[str, np.ndarray]       # name -> float32 array
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_params(cls, params: ModelParams, vocab: Vocabulary,
                    metadata: dict | None = None) -> "Checkpoint":
        arrays = {name: t.values.astype(np.float32)
                  for name, t in params.named_tensors()}
        return cls(config=params.config, vocab_words=vocab.to_list(),
                   arrays=arrays, metadata=dict(metadata or {}))

    def vocabulary(self) -> Vocabulary:
        return Vocabulary.from_list(self.vocab_words)

    def to_params(self) -> ModelParams:
        """Rebuild ModelParams (float64) carrying exactly the stored values."""
        params = init_params(self.config, np.random.default_rng(0))
        names = [name for name, _ in params.named_tensors()]
        if set(names) != set(self.arrays):
            missing = set(names) - set(self.arrays)
            extra = set(self.arrays) - set(names)
            raise CheckpointShapeError(
                f"array directory mismatch: missing {sorted(missing)}, "
                f"unexpected {sorted(extra)}")
        for name, tensor in params.named_tensors():
            stored = self.arrays[name]
            if stored.shape != tensor.values.shape:
                raise CheckpointShapeError(
                    f"array {name!r} has shape {stored.shape}, "
                    f"config implies {tensor.values.shape}")
            tensor.values = stored.astype(np.float64)
            tensor.grad = None
        return params


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    """Write atomically (temp file + rename in the target directory)."""
    directory = []
    offset = 0
    payload_parts = []
    for name in sorted(ckpt.arrays):
        arr = np.ascontiguousarray(ckpt.arrays[name], dtype="<f4")
        directory.append({"name": name, "shape": list(arr.shape), "offset": offset})
        payload_parts.append(arr.tobytes())
        offset += arr.nbytes
    header = {
        "arrays": directory,
        "config": ckpt.config.to_dict(),
        "metadata": ckpt.metadata,
        "payload_bytes": offset,
        "vocabulary": ckpt.vocab_words,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":"),
                              ensure_ascii=False).encode("utf-8")
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(np.uint32(FORMAT_VERSION).tobytes())
            fh.write(np.uint64(len(header_bytes)).tobytes())
            fh.write(header_bytes)
            for part in payload_parts:
                fh.write(part)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path: str | Path) -> Checkpoint:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(MAGIC) + 12 or data[:len(MAGIC)] != MAGIC:
        raise CheckpointVersionError("not a checkpoint file (bad magic)")
    pos = len(MAGIC)
    version = int(np.frombuffer(data, dtype="<u4", count=1, offset=pos)[0])
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"unsupported checkpoint format version {version}, expected {FORMAT_VERSION}")
    pos += 4
    header_len = int(np.frombuffer(data, dtype="<u8", count=1, offset=pos)[0])
    pos += 8
    if len(data) < pos + header_len:
        raise CheckpointTruncatedError("file ends inside the header")
    try:
        header = json.loads(data[pos:pos + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from exc
    pos += header_len
    payload = data[pos:]
    declared = header.get("payload_bytes", 0)
    if len(payload) < declared:
        raise CheckpointTruncatedError(
            f"payload has {len(payload)} bytes, header declares {declared}")
    arrays = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        start = entry["offset"]
        end = start + count * 4
        if end > declared:
            raise CheckpointShapeError(
                f"array {entry['name']!r} extends past the declared payload")
        arrays[entry["name"]] = np.frombuffer(
            payload, dtype="<f4", count=count, offset=start).reshape(shape).copy()
    return Checkpoint(
        config=ModelConfig.from_dict(header["config"]),
        vocab_words=list(header["vocabulary"]),
        arrays=arrays,
        metadata=header.get("metadata", {}),
    )
