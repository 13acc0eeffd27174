"""Run configuration: one document combining model, data, and training settings.

Loaded from YAML with strict key checking; any field can be overridden on the
command line with dotted keys (`--set stage1.init_lr=3e-4`).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any

import yaml

from .embedder import EmbedderConfig
from .separator import ExformerConfig
from .training import EmbedderTrainConfig, MixingConfig, TrainConfig, stage2_defaults


@dataclass(frozen=True)
class PathsConfig:
    corpus_manifest: str = "corpus/manifest.jsonl"
    out_dir: str = "runs/exformer"
    embedder_checkpoint: str = ""
    stage1_checkpoint: str = ""


@dataclass(frozen=True)
class EvalConfig:
    n_items: int = 20
    seed: int = 1234

    def __post_init__(self) -> None:
        if self.n_items < 1:
            raise ValueError("eval.n_items must be ≥ 1")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    embedder_training: EmbedderTrainConfig = field(default_factory=EmbedderTrainConfig)
    separator: ExformerConfig = field(default_factory=ExformerConfig)
    mixing: MixingConfig = field(default_factory=MixingConfig)
    stage1: TrainConfig = field(default_factory=TrainConfig)
    stage2: TrainConfig = field(default_factory=stage2_defaults)
    eval: EvalConfig = field(default_factory=EvalConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)


def _coerce(value: Any, template: Any, context: str) -> Any:
    """Fit a parsed YAML scalar to the type of the field's default value."""
    if isinstance(template, bool):
        if isinstance(value, bool):
            return value
        raise ValueError(f"{context}: expected a boolean, got {value!r}")
    if isinstance(template, int) and not isinstance(template, bool):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        raise ValueError(f"{context}: expected an integer, got {value!r}")
    if isinstance(template, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if isinstance(value, str):
            # YAML leaves exponent forms without a decimal point ("3e-4") as strings
            try:
                return float(value)
            except ValueError:
                pass
        raise ValueError(f"{context}: expected a number, got {value!r}")
    if isinstance(template, str):
        if isinstance(value, str):
            return value
        raise ValueError(f"{context}: expected a string, got {value!r}")
    raise ValueError(f"{context}: unsupported value {value!r}")


def _build(cls: type, data: dict, context: str) -> Any:
    if not isinstance(data, dict):
        raise ValueError(f"{context}: expected a mapping, got {data!r}")
    defaults = cls()
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ValueError(f"unknown config key {context}.{key}" if context else f"unknown config key {key}")
        template = getattr(defaults, key)
        sub_context = f"{context}.{key}" if context else key
        if is_dataclass(template):
            kwargs[key] = _build(type(template), value, sub_context)
        else:
            kwargs[key] = _coerce(value, template, sub_context)
    return cls(**kwargs)


def build_run_config(data: dict | None) -> RunConfig:
    return _build(RunConfig, data or {}, "")


def apply_overrides(cfg: RunConfig, pairs: list[str]) -> RunConfig:
    """Apply `dotted.key=value` overrides; values are parsed as YAML scalars."""
    data = asdict(cfg)
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise ValueError(f"override must look like key=value, got {pair!r}")
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ValueError(f"unknown config key {key}")
            node = node[part]
        leaf = parts[-1]
        if not isinstance(node, dict) or leaf not in node:
            raise ValueError(f"unknown config key {key}")
        if isinstance(node[leaf], dict):
            raise ValueError(f"{key} is a config section, not a value")
        try:
            node[leaf] = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ValueError(f"bad override value for {key}: {raw!r} ({exc})") from exc
    return build_run_config(data)


def load_run_config(path: str | Path | None = None, overrides: list[str] | None = None) -> RunConfig:
    data: dict | None = None
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"no such config file: {path}")
        loaded = yaml.safe_load(path.read_text())
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ValueError(f"{path}: config root must be a mapping")
        data = loaded
    cfg = build_run_config(data)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg


def save_run_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(asdict(cfg), sort_keys=True))
