#!/usr/bin/env python3
"""Compare the three embedding-fusion modes under an identical training budget.

Each mode trains a separator from the same initial seed on the same fixed
set of mixtures (the overfit sanity regime — the only regime where a desk
CPU budget produces separations worth comparing), with one shared pretrained
embedder. Results land in <out>/sweep.json together with a printed ranking.
Expect several minutes of CPU time at the default budget.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import torch

from exformer import (
    FUSION_MODES,
    DynamicMixStream,
    EmbedderConfig,
    EmbedderTrainConfig,
    Exformer,
    ExformerConfig,
    FixedItemStream,
    MixingConfig,
    SpeakerEmbedder,
    TrainConfig,
    generate_corpus,
    load_pretrained_embedder,
    pretrain_embedder,
    read_manifest,
    train_supervised,
)

DESK_MODEL = dict(
    feature_dim=64, chunk_len=16, n_blocks=2, layers_per_path=2,
    n_heads=4, ff_dim=128, embed_dim=64,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs/fusion_sweep")
    parser.add_argument("--manifest", help="existing corpus manifest (default: synthesize one)")
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--steps", type=int, default=100)
    parser.add_argument("--lr", type=float, default=2.5e-3)
    parser.add_argument("--seed", type=int, default=11)
    parser.add_argument("--n-items", type=int, default=4, help="fixed mixtures to overfit")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.manifest:
        manifest = Path(args.manifest)
    else:
        manifest = generate_corpus(out / "corpus", n_speakers=8, utts_per_speaker=12,
                                   duration_s=4.0, seed=0)
        print(f"synthesized corpus -> {manifest}")
    records = read_manifest(manifest)

    embedder_ckpt = out / "embedder" / "embedder.ckpt"
    if not embedder_ckpt.exists():
        torch.manual_seed(args.seed)
        embedder = SpeakerEmbedder(EmbedderConfig(n_blstm_layers=2, hidden_units=128, embed_dim=64))
        embedder_ckpt = pretrain_embedder(
            records, embedder, EmbedderTrainConfig(utt_seconds=2.0, steps=40, seed=0),
            out / "embedder",
        )
        print(f"pretrained embedder -> {embedder_ckpt}")

    mixing = MixingConfig(segment_seconds=0.75)
    train_cfg = TrainConfig(init_lr=args.lr, max_epochs=args.epochs,
                            steps_per_epoch=args.steps, seed=args.seed,
                            n_val_items=args.n_items)
    source = DynamicMixStream(records, mixing, args.seed)
    items = [source.item(i) for i in range(args.n_items)]

    results = {}
    for mode in FUSION_MODES:
        print(f"\n== fusion mode: {mode} ==")
        torch.manual_seed(args.seed)
        model = Exformer(ExformerConfig(fusion_mode=mode, **DESK_MODEL))
        embedder = load_pretrained_embedder(embedder_ckpt)
        result = train_supervised(model, embedder, FixedItemStream(items), items,
                                  train_cfg, out / mode)
        results[mode] = {
            "val_si_sdri_db": result.final_val_si_sdri,
            "first_epoch_train_loss": result.first_epoch_train_loss,
            "final_epoch_train_loss": result.final_epoch_train_loss,
            "best_checkpoint": str(result.best_checkpoint),
        }
        print(f"{mode}: validation SI-SDRi {result.final_val_si_sdri:+.2f} dB")

    (out / "sweep.json").write_text(json.dumps(results, indent=2, sort_keys=True))
    print("\n== ranking ==")
    for mode, r in sorted(results.items(), key=lambda kv: -kv[1]["val_si_sdri_db"]):
        print(f"{r['val_si_sdri_db']:+7.2f} dB  {mode}")
    print(f"\nwrote {out / 'sweep.json'}")


if __name__ == "__main__":
    main()
