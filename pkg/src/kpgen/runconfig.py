"""Layered run configuration for the command-line tools.

Settings resolve in three layers: dataclass defaults, then an INI-style
config file with [model], [training], [beam], and [run] sections, then
command-line flags. Unknown sections or keys in the file are errors, not
silently ignored typos.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass

from .decoding import BeamConfig
from .errors import UsageError
from .model import ModelConfig
from .training import TrainConfig

__all__ = ["RunConfig", "parse_bool", "parse_ks"]


def parse_bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def parse_ks(text: str) -> list[int]:
    try:
        ks = [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}")
    if not ks:
        raise UsageError("at least one cutoff k is required")
    return ks


def _int(text):
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"expected an integer, got {text!r}")


def _float(text):
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"expected a number, got {text!r}")


def _opt(coerce):
    def inner(text):
        if str(text).strip().lower() in ("none", ""):
            return None
        return coerce(text)
    return inner


_SCHEMA = {
    "model": {
        "embedding_dim": _int,
        "hidden_dim": _int,
        "copy_enabled": parse_bool,
        "dropout_rate": _float,
        "init_range": _float,
        "copy_score_activation": str,
        "share_embedding": parse_bool,
    },
    "training": {
        "batch_size": _int,
        "learning_rate": _float,
        "clip_threshold": _float,
        "dropout_rate": _opt(_float),
        "max_epochs": _int,
        "patience": _int,
        "validation_interval": _opt(_int),
    },
    "beam": {
        "beam_size": _int,
        "max_depth": _int,
        "count": _int,
    },
    "run": {
        "vocab_size": _int,
        "val_fraction": _float,
        "workers": _int,
        "seed": _int,
        "ks": parse_ks,
    },
}


def _defaults() -> dict[str, dict]:
    def from_dataclass(cls, skip=()):
        return {f.name: f.default for f in dataclasses.fields(cls)
                if f.name not in skip}

    return {
        "model": from_dataclass(ModelConfig, skip=("vocab_size",)),
        "training": from_dataclass(TrainConfig, skip=("seed",)),
        "beam": from_dataclass(BeamConfig),
        "run": {"vocab_size": 50000, "val_fraction": 0.1, "workers": 1,
                "seed": 0, "ks": [5, 10]},
    }


def _read_file(path) -> dict[str, dict]:
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise UsageError(f"cannot parse config file {path}: {exc}")
    if parser.defaults():
        raise UsageError("config keys must live under a [model], [training], "
                         "[beam], or [run] section")
    data: dict[str, dict] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise UsageError(f"unknown config section [{section}] in {path}")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise UsageError(f"unknown config key {key!r} in [{section}] "
                                 f"of {path}")
            data.setdefault(section, {})[key] = _SCHEMA[section][key](raw)
    return data


@dataclass(frozen=True)
class RunConfig:
    """Effective settings, one dict per section."""

    model: dict
    training: dict
    beam: dict
    run: dict

    @classmethod
    def load(cls, config_path=None, overrides: dict | None = None) -> "RunConfig":
        """Resolve defaults <- config file <- flag overrides.

        ``overrides`` maps (section, key) to an already-typed value; None
        values (unset flags) are ignored.
        """
        data = _defaults()
        if config_path is not None:
            for section, entries in _read_file(config_path).items():
                data[section].update(entries)
        for (section, key), value in (overrides or {}).items():
            if value is None:
                continue
            if section not in _SCHEMA or key not in _SCHEMA[section]:
                raise UsageError(f"unknown setting {section}.{key}")
            data[section][key] = value
        run = data["run"]
        if run["vocab_size"] < 1:
            raise UsageError(f"vocab_size must be >= 1, got {run['vocab_size']}")
        if not 0.0 <= run["val_fraction"] < 1.0:
            raise UsageError("val_fraction must be in [0, 1), got "
                             f"{run['val_fraction']}")
        if run["workers"] < 1:
            raise UsageError(f"workers must be >= 1, got {run['workers']}")
        if any(k < 1 for k in run["ks"]):
            raise UsageError(f"cutoffs must be >= 1, got {run['ks']}")
        return cls(**data)

    def model_config(self, vocab_size: int) -> ModelConfig:
        return ModelConfig(vocab_size=vocab_size, **self.model)

    def train_config(self) -> TrainConfig:
        return TrainConfig(seed=self.run["seed"], **self.training)

    def beam_config(self) -> BeamConfig:
        return BeamConfig(**self.beam)

    def to_dict(self) -> dict:
        return {
            "model": dict(self.model),
            "training": dict(self.training),
            "beam": dict(self.beam),
            "run": dict(self.run),
        }
