"""Command-line entry point: corpus synthesis, training stages, evaluation, extraction.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Sequence

import torch

from .audio import AudioFormatError, load_wav, save_wav
from .config import RunConfig, load_run_config, save_run_config
from .corpus import generate_corpus, read_manifest
from .embedder import SpeakerEmbedder
from .separator import FUSION_MODES, Exformer, extract
from .training import (
    BernoulliUnlabeledStream,
    DynamicMixStream,
    FixedItemStream,
    MixingConfig,
    evaluate,
    load_pretrained_embedder,
    load_training_checkpoint,
    make_validation_items,
    model_separate_fn,
    pretrain_embedder,
    train_semi,
    train_supervised,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

# validation/eval item draws must never collide with training draws
_VAL_SEED_OFFSET = 7919


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would sys.exit(2); we map usage errors to 1
        raise _UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="exformer", description="Target speaker extraction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-data", help="generate the synthetic speaker corpus")
    p.add_argument("--speakers", type=int, default=8)
    p.add_argument("--utts", type=int, default=12)
    p.add_argument("--duration", type=float, default=4.0, help="utterance length in seconds")
    p.add_argument("--out", required=True, help="corpus output directory")
    p.add_argument("--seed", type=int, default=0)

    for name, extra in (
        ("pretrain-embedder", ()),
        ("train", ("fusion",)),
        ("train-semi", ("stage1-ckpt",)),
    ):
        p = sub.add_parser(name, help=f"run {name.replace('-', ' ')}")
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides")
        if "fusion" in extra:
            p.add_argument("--fusion", choices=FUSION_MODES, help="override separator.fusion_mode")
        if "stage1-ckpt" in extra:
            p.add_argument("--stage1-ckpt", help="stage-1 checkpoint (default: paths.stage1_checkpoint)")

    p = sub.add_parser("evaluate", help="score a checkpoint on simulated test mixtures")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--test", required=True, help="corpus manifest for the test items")
    p.add_argument("--n-items", type=int, default=20)
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--segment-seconds", type=float, default=3.0, help="simulated mixture length")

    p = sub.add_parser("extract", help="extract a target speaker from one mixture")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--mixture", required=True)
    p.add_argument("--enroll", required=True)
    p.add_argument("--out-target", required=True)
    p.add_argument("--out-residual", required=True)
    return parser


def _prepare_run(args: argparse.Namespace) -> tuple[RunConfig, Path]:
    cfg = load_run_config(args.config, args.overrides)
    if getattr(args, "fusion", None):
        cfg = replace(cfg, separator=replace(cfg.separator, fusion_mode=args.fusion))
    out_dir = Path(cfg.paths.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_run_config(cfg, out_dir / "config.yaml")
    torch.manual_seed(cfg.seed)
    return cfg, out_dir


def _cmd_synth_data(args: argparse.Namespace) -> int:
    manifest = generate_corpus(
        args.out, n_speakers=args.speakers, utts_per_speaker=args.utts, duration_s=args.duration, seed=args.seed
    )
    print(manifest)
    return EXIT_OK


def _cmd_pretrain_embedder(args: argparse.Namespace) -> int:
    cfg, out_dir = _prepare_run(args)
    records = read_manifest(cfg.paths.corpus_manifest)
    embedder = SpeakerEmbedder(cfg.embedder)
    ckpt = pretrain_embedder(records, embedder, cfg.embedder_training, out_dir)
    print(ckpt)
    return EXIT_OK


def _streams_for(cfg: RunConfig, n_val_items: int, unlabeled_prob: float = 0.0):
    records = read_manifest(cfg.paths.corpus_manifest)
    train_stream = DynamicMixStream(records, cfg.mixing, cfg.seed)
    if cfg.mixing.n_fixed_items > 0:
        # overfit sanity regime: cycle N materialized mixtures, validate on them
        items = [train_stream.item(i) for i in range(cfg.mixing.n_fixed_items)]
        train_stream = FixedItemStream(items)
        val_items = items[:n_val_items]
    else:
        val_stream = DynamicMixStream(records, cfg.mixing, cfg.seed + _VAL_SEED_OFFSET)
        val_items = make_validation_items(val_stream, n_val_items)
    if unlabeled_prob > 0:
        train_stream = BernoulliUnlabeledStream(train_stream, unlabeled_prob, cfg.seed)
    return train_stream, val_items


def _cmd_train(args: argparse.Namespace) -> int:
    cfg, out_dir = _prepare_run(args)
    if not cfg.paths.embedder_checkpoint:
        raise ValueError("paths.embedder_checkpoint must point at a pretrained embedder")
    embedder = load_pretrained_embedder(cfg.paths.embedder_checkpoint)
    if embedder.cfg.embed_dim != cfg.separator.embed_dim:
        raise ValueError(
            f"separator.embed_dim ({cfg.separator.embed_dim}) does not match the "
            f"embedder checkpoint ({embedder.cfg.embed_dim})"
        )
    model = Exformer(cfg.separator)
    stream, val_items = _streams_for(cfg, cfg.stage1.n_val_items)
    result = train_supervised(model, embedder, stream, val_items, cfg.stage1, out_dir)
    print(result.best_checkpoint)
    return EXIT_OK


def _cmd_train_semi(args: argparse.Namespace) -> int:
    cfg, out_dir = _prepare_run(args)
    stage1 = args.stage1_ckpt or cfg.paths.stage1_checkpoint
    if not stage1:
        raise ValueError("provide --stage1-ckpt or set paths.stage1_checkpoint")
    stream, val_items = _streams_for(cfg, cfg.stage2.n_val_items, unlabeled_prob=cfg.stage2.unlabeled_prob)
    result = train_semi(stage1, stream, val_items, cfg.stage2, out_dir)
    print(result.best_checkpoint)
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    model, embedder, meta = load_training_checkpoint(args.ckpt)
    records = read_manifest(args.test)
    stream = DynamicMixStream(records, MixingConfig(segment_seconds=args.segment_seconds), args.seed)
    items = make_validation_items(stream, args.n_items)
    report = evaluate(items, model_separate_fn(model, embedder))
    print(json.dumps(asdict(report), sort_keys=True))
    return EXIT_OK


def _cmd_extract(args: argparse.Namespace) -> int:
    model, embedder, meta = load_training_checkpoint(args.ckpt)
    sample_rate = int(meta.get("sample_rate", 8000))
    mixture = load_wav(args.mixture, expected_sample_rate=sample_rate)
    enroll = load_wav(args.enroll, expected_sample_rate=sample_rate)
    est_target, est_residual = extract(mixture, enroll, model, embedder)
    save_wav(args.out_target, est_target)
    save_wav(args.out_residual, est_residual)
    print(json.dumps({"target": args.out_target, "residual": args.out_residual}, sort_keys=True))
    return EXIT_OK


_COMMANDS = {
    "synth-data": _cmd_synth_data,
    "pretrain-embedder": _cmd_pretrain_embedder,
    "train": _cmd_train,
    "train-semi": _cmd_train_semi,
    "evaluate": _cmd_evaluate,
    "extract": _cmd_extract,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, RuntimeError, AudioFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
