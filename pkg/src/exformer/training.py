"""Training harness: embedder pretraining, supervised stage 1, semi-supervised stage 2, evaluation."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np
import torch

from .audio import Waveform, log_mel, speed_perturb
from .checkpoint import load_checkpoint, load_module_arrays, module_arrays, save_checkpoint
from .corpus import UtteranceRecord, group_by_speaker, load_utterance
from .embedder import EmbedderConfig, GE2ELoss, SpeakerEmbedder
from .losses import LossWeights, semi_supervised_loss, si_sdr_loss
from .metrics import si_sdr, si_sdr_improvement
from .mixing import MixSpec, TrainItem, dynamic_mix
from .separator import Exformer, ExformerConfig

# rng stream tags: labeled draws, unlabeled Bernoulli, embedder batches
_MIX_TAG = 0x301A
_SEMI_TAG = 0x5E31
_GE2E_TAG = 0x6E2E


@dataclass(frozen=True)
class MixingConfig:
    """Ranges for the on-the-fly mixture simulation.

    `n_fixed_items > 0` switches training from fresh mixtures every step to
    cycling that many materialized mixtures — the standard overfit sanity
    check, where validation runs on the same items.
    """

    snr_min_db: float = 0.0
    snr_max_db: float = 5.0
    segment_seconds: float = 3.0
    speed_perturb: bool = True
    speed_min: float = 0.95
    speed_max: float = 1.05
    n_fixed_items: int = 0

    def __post_init__(self) -> None:
        if self.snr_min_db > self.snr_max_db:
            raise ValueError("snr_min_db must not exceed snr_max_db")
        if not (0 < self.speed_min <= self.speed_max):
            raise ValueError("bad speed factor range")
        if self.n_fixed_items < 0:
            raise ValueError("n_fixed_items must be ≥ 0")


@dataclass(frozen=True)
class TrainConfig:
    """Separator training settings; defaults are the full-scale stage-1 values."""

    batch_size: int = 1
    init_lr: float = 1.5e-4
    lr_floor: float = 1e-6
    plateau_patience: int = 2
    scheduler_start_epoch: int = 85
    max_epochs: int = 100
    steps_per_epoch: int = 200
    unlabeled_prob: float = 0.0
    seed: int = 0
    grad_clip: float = 5.0
    n_val_items: int = 4
    loss_weights: LossWeights = field(default_factory=LossWeights)

    def __post_init__(self) -> None:
        if self.batch_size != 1:
            raise ValueError("only batch_size 1 is supported")
        if not (0.0 <= self.unlabeled_prob <= 1.0):
            raise ValueError("unlabeled_prob must lie in [0, 1]")
        if self.init_lr <= self.lr_floor:
            raise ValueError("init_lr must exceed lr_floor")
        if self.max_epochs < 1 or self.steps_per_epoch < 1:
            raise ValueError("max_epochs and steps_per_epoch must be ≥ 1")


def stage2_defaults(**overrides) -> TrainConfig:
    """Stage-2 settings: lower learning rate, earlier scheduler onset, unlabeled sampling."""
    base = dict(init_lr=7.5e-5, scheduler_start_epoch=65, unlabeled_prob=0.10)
    base.update(overrides)
    return TrainConfig(**base)


@dataclass(frozen=True)
class SchedulerState:
    current_lr: float
    best_val: float = math.inf
    epochs_since_improve: int = 0


def scheduler_step(state: SchedulerState, val_loss: float, epoch: int, cfg: TrainConfig) -> SchedulerState:
    """Plateau rule: past the start epoch, `plateau_patience` consecutive
    non-improving epochs halve the learning rate, clamped at the floor."""
    if not math.isfinite(val_loss):
        raise ValueError("validation loss must be finite")
    if val_loss < state.best_val:
        return SchedulerState(state.current_lr, val_loss, 0)
    stalled = state.epochs_since_improve + 1
    lr = state.current_lr
    if epoch > cfg.scheduler_start_epoch and stalled >= cfg.plateau_patience:
        lr = max(lr * 0.5, cfg.lr_floor)
        stalled = 0
    return SchedulerState(lr, state.best_val, stalled)


class ItemStream(Protocol):
    def item(self, index: int) -> TrainItem: ...


class DynamicMixStream:
    """Labeled training items simulated on the fly.

    item(i) is a pure function of (seed, i): worker count and call order never
    change what is drawn. Source crops get speed-perturbed before mixing; the
    enrollment is a different utterance of the target speaker, used unmodified.
    """

    def __init__(self, records: Sequence[UtteranceRecord], mixing: MixingConfig, seed: int):
        groups = {sid: utts for sid, utts in group_by_speaker(list(records)).items() if len(utts) >= 2}
        if len(groups) < 2:
            raise ValueError("dynamic mixing needs ≥ 2 speakers with ≥ 2 utterances each")
        self.mixing = mixing
        self.seed = seed
        self._speakers = sorted(groups)
        self._groups = groups
        self._cache: dict[str, Waveform] = {}

    def _load(self, rec: UtteranceRecord) -> Waveform:
        if rec.utt_id not in self._cache:
            self._cache[rec.utt_id] = load_utterance(rec)
        return self._cache[rec.utt_id]

    def item(self, index: int) -> TrainItem:
        rng = np.random.default_rng([_MIX_TAG, self.seed, index])
        spk_t, spk_i = (self._speakers[k] for k in rng.choice(len(self._speakers), 2, replace=False))
        utts_t = self._groups[spk_t]
        target_idx, enroll_idx = rng.choice(len(utts_t), 2, replace=False)
        interf_rec = self._groups[spk_i][int(rng.integers(len(self._groups[spk_i])))]

        src_t = self._load(utts_t[int(target_idx)])
        src_i = self._load(interf_rec)
        enroll = self._load(utts_t[int(enroll_idx)])
        if self.mixing.speed_perturb:
            src_t = speed_perturb(src_t, float(rng.uniform(self.mixing.speed_min, self.mixing.speed_max)))
            src_i = speed_perturb(src_i, float(rng.uniform(self.mixing.speed_min, self.mixing.speed_max)))
        spec = MixSpec(
            snr_db=float(rng.uniform(self.mixing.snr_min_db, self.mixing.snr_max_db)),
            segment_seconds=self.mixing.segment_seconds,
            seed=int(rng.integers(2**31)),
        )
        return dynamic_mix(src_t, src_i, spec, enroll)


class FixedItemStream:
    """Cycles a fixed list of items; the overfit smoke runs use this."""

    def __init__(self, items: Sequence[TrainItem]):
        if not items:
            raise ValueError("need at least one item")
        self._items = list(items)

    def item(self, index: int) -> TrainItem:
        return self._items[index % len(self._items)]


class BernoulliUnlabeledStream:
    """Strips references from an underlying stream's items with probability p, per item index."""

    def __init__(self, inner: ItemStream, p: float, seed: int):
        if not (0.0 <= p <= 1.0):
            raise ValueError("p must lie in [0, 1]")
        self.inner = inner
        self.p = p
        self.seed = seed

    def item(self, index: int) -> TrainItem:
        item = self.inner.item(index)
        if self.p > 0 and np.random.default_rng([_SEMI_TAG, self.seed, index]).random() < self.p:
            return TrainItem(mixture=item.mixture, enrollment=item.enrollment, labeled=False)
        return item


def make_validation_items(stream: ItemStream, n_items: int) -> list[TrainItem]:
    """Materializes a fixed held-out set from a (labeled) stream."""
    items = [stream.item(i) for i in range(n_items)]
    if any(not it.labeled for it in items):
        raise ValueError("validation items must be labeled")
    return items


@dataclass(frozen=True)
class EvalReport:
    mean_si_sdr: float
    mean_si_sdri: float
    n_items: int


def evaluate(items: Sequence[TrainItem], separate_fn: Callable[[TrainItem], np.ndarray]) -> EvalReport:
    """Mean SI-SDR of the target estimate and its improvement over the mixture."""
    if not items:
        raise ValueError("evaluate needs at least one item")
    sdrs, sdris = [], []
    for item in items:
        if not item.labeled:
            raise ValueError("evaluation items must be labeled")
        est = np.asarray(separate_fn(item), dtype=np.float64)
        sdrs.append(si_sdr(item.target.samples, est))
        sdris.append(si_sdr_improvement(item.target.samples, est, item.mixture.samples))
    report = EvalReport(float(np.mean(sdrs)), float(np.mean(sdris)), len(items))
    if not (math.isfinite(report.mean_si_sdr) and math.isfinite(report.mean_si_sdri)):
        raise RuntimeError("non-finite evaluation metrics")
    return report


def model_separate_fn(model: Exformer, embedder: SpeakerEmbedder) -> Callable[[TrainItem], np.ndarray]:
    dtype = next(model.parameters()).dtype

    def separate(item: TrainItem) -> np.ndarray:
        model.eval()
        embedder.eval()
        with torch.no_grad():
            z_e = embedder.embed_waveform(torch.as_tensor(item.enrollment.samples, dtype=dtype))
            est = model(torch.as_tensor(item.mixture.samples, dtype=dtype), z_e)
        return est[0].to(torch.float64).numpy()

    return separate


def _freeze(embedder: SpeakerEmbedder) -> None:
    embedder.requires_grad_(False)
    embedder.eval()


def _validation_metrics(
    model: Exformer, embedder: SpeakerEmbedder, items: Sequence[TrainItem]
) -> tuple[float, float]:
    """Mean labeled reconstruction loss (drives the scheduler) and mean SI-SDRi."""
    dtype = next(model.parameters()).dtype
    was_training = model.training
    model.eval()
    losses, sdris = [], []
    with torch.no_grad():
        for item in items:
            z_e = embedder.embed_waveform(torch.as_tensor(item.enrollment.samples, dtype=dtype))
            est = model(torch.as_tensor(item.mixture.samples, dtype=dtype), z_e)
            losses.append(float(si_sdr_loss(item.target, item.residual, est[0], est[1])))
            est_t = est[0].to(torch.float64).numpy()
            sdris.append(si_sdr_improvement(item.target.samples, est_t, item.mixture.samples))
    model.train(was_training)
    return float(np.mean(losses)), float(np.mean(sdris))


def _optimizer_arrays(model: Exformer, opt: torch.optim.Optimizer, prefix: str = "optim.") -> dict[str, np.ndarray]:
    out = {}
    for name, param in model.named_parameters():
        state = opt.state.get(param)
        if not state:
            continue
        out[prefix + name + ".step"] = np.asarray([float(state["step"])], dtype=np.float64)
        out[prefix + name + ".exp_avg"] = state["exp_avg"].detach().numpy().copy()
        out[prefix + name + ".exp_avg_sq"] = state["exp_avg_sq"].detach().numpy().copy()
    return out


def _load_optimizer_arrays(
    model: Exformer, opt: torch.optim.Optimizer, arrays: dict[str, np.ndarray], prefix: str = "optim."
) -> None:
    for name, param in model.named_parameters():
        key = prefix + name
        if key + ".step" not in arrays:
            continue
        opt.state[param] = {
            "step": torch.tensor(float(arrays[key + ".step"][0])),
            "exp_avg": torch.as_tensor(arrays[key + ".exp_avg"]).clone(),
            "exp_avg_sq": torch.as_tensor(arrays[key + ".exp_avg_sq"]).clone(),
        }


def _bundle_meta(
    model: Exformer,
    embedder: SpeakerEmbedder,
    cfg: TrainConfig,
    stage: str,
    epoch: int,
    global_step: int,
    sched: SchedulerState,
    best_val: float,
) -> dict:
    return {
        "stage": stage,
        "epoch": epoch,
        "global_step": global_step,
        "scheduler": {
            "current_lr": sched.current_lr,
            "best_val": None if math.isinf(sched.best_val) else sched.best_val,
            "epochs_since_improve": sched.epochs_since_improve,
        },
        "best_val": None if math.isinf(best_val) else best_val,
        "separator_config": asdict(model.cfg),
        "embedder_config": asdict(embedder.cfg),
        "fusion_mode": model.cfg.fusion_mode,
        "train_config": asdict(cfg),
        "sample_rate": embedder.sample_rate,
    }


def save_training_checkpoint(
    path: str | Path,
    model: Exformer,
    embedder: SpeakerEmbedder,
    meta: dict,
    optimizer: torch.optim.Optimizer | None = None,
) -> None:
    arrays = module_arrays(model, "separator.") | module_arrays(embedder, "embedder.")
    if optimizer is not None:
        arrays |= _optimizer_arrays(model, optimizer)
    save_checkpoint(path, arrays, meta)


def load_training_checkpoint(path: str | Path) -> tuple[Exformer, SpeakerEmbedder, dict]:
    """Rebuild the separator and (frozen) embedder exactly as checkpointed."""
    arrays, meta = load_checkpoint(path)
    try:
        sep_cfg = ExformerConfig(**meta["separator_config"])
        emb_cfg = EmbedderConfig(**meta["embedder_config"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: checkpoint is missing model configuration ({exc})") from exc
    model = Exformer(sep_cfg)
    load_module_arrays(model, arrays, "separator.")
    embedder = SpeakerEmbedder(emb_cfg, sample_rate=int(meta.get("sample_rate", 8000)))
    load_module_arrays(embedder, arrays, "embedder.")
    _freeze(embedder)
    return model, embedder, meta


@dataclass(frozen=True)
class TrainResult:
    best_checkpoint: Path
    last_checkpoint: Path
    log_path: Path
    best_val: float
    final_val_si_sdri: float
    first_epoch_train_loss: float
    final_epoch_train_loss: float


def _loss_supervised(
    model: Exformer, embedder: SpeakerEmbedder, item: TrainItem, weights: LossWeights
) -> torch.Tensor:
    dtype = next(model.parameters()).dtype
    with torch.no_grad():
        z_e = embedder.embed_waveform(torch.as_tensor(item.enrollment.samples, dtype=dtype))
    est = model(torch.as_tensor(item.mixture.samples, dtype=dtype), z_e)
    return si_sdr_loss(item.target, item.residual, est[0], est[1])


def _loss_semi(model: Exformer, embedder: SpeakerEmbedder, item: TrainItem, weights: LossWeights) -> torch.Tensor:
    dtype = next(model.parameters()).dtype
    with torch.no_grad():
        z_e = embedder.embed_waveform(torch.as_tensor(item.enrollment.samples, dtype=dtype))
    est = model(torch.as_tensor(item.mixture.samples, dtype=dtype), z_e)
    return semi_supervised_loss(item, est[0], est[1], embedder, weights)


def _run_training(
    model: Exformer,
    embedder: SpeakerEmbedder,
    stream: ItemStream,
    val_items: Sequence[TrainItem],
    cfg: TrainConfig,
    out_dir: str | Path,
    stage: str,
    loss_fn: Callable[[Exformer, SpeakerEmbedder, TrainItem, LossWeights], torch.Tensor],
    resume_from: str | Path | None = None,
) -> TrainResult:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _freeze(embedder)
    embedder_before = module_arrays(embedder)

    opt = torch.optim.Adam(model.parameters(), lr=cfg.init_lr)
    sched = SchedulerState(cfg.init_lr)
    best_val = math.inf
    start_epoch = 1
    global_step = 0

    if resume_from is not None:
        arrays, meta = load_checkpoint(resume_from)
        if meta.get("stage") != stage:
            raise ValueError(f"cannot resume {stage} from a {meta.get('stage')!r} checkpoint")
        load_module_arrays(model, arrays, "separator.")
        _load_optimizer_arrays(model, opt, arrays)
        s = meta["scheduler"]
        sched = SchedulerState(
            s["current_lr"],
            math.inf if s["best_val"] is None else s["best_val"],
            s["epochs_since_improve"],
        )
        best_val = math.inf if meta["best_val"] is None else meta["best_val"]
        start_epoch = meta["epoch"] + 1
        global_step = meta["global_step"]

    best_path = out_dir / f"{stage}_best.ckpt"
    last_path = out_dir / f"{stage}_last.ckpt"
    log_path = out_dir / f"{stage}_log.jsonl"
    first_epoch_loss = math.nan
    train_loss = math.nan
    val_si_sdri = math.nan
    meta = _bundle_meta(model, embedder, cfg, stage, start_epoch - 1, global_step, sched, best_val)

    with open(log_path, "a" if resume_from is not None else "w") as log_fh:
        for epoch in range(start_epoch, cfg.max_epochs + 1):
            for group in opt.param_groups:
                group["lr"] = sched.current_lr
            epoch_losses = []
            model.train()
            for _ in range(cfg.steps_per_epoch):
                item = stream.item(global_step)
                global_step += 1
                loss = loss_fn(model, embedder, item, cfg.loss_weights)
                if not torch.isfinite(loss):
                    raise RuntimeError(f"non-finite training loss at step {global_step} (epoch {epoch})")
                opt.zero_grad()
                loss.backward()
                torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
                opt.step()
                epoch_losses.append(loss.detach().item())
            train_loss = float(np.mean(epoch_losses))
            if epoch == start_epoch:
                first_epoch_loss = train_loss
            val_loss, val_si_sdri = _validation_metrics(model, embedder, val_items)
            sched = scheduler_step(sched, val_loss, epoch, cfg)
            log_fh.write(
                json.dumps(
                    {
                        "epoch": epoch,
                        "lr": sched.current_lr,
                        "train_loss": train_loss,
                        "val_loss": val_loss,
                        "mean_si_sdri": val_si_sdri,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
            log_fh.flush()
            meta = _bundle_meta(model, embedder, cfg, stage, epoch, global_step, sched, best_val)
            if val_loss < best_val:
                best_val = val_loss
                meta["best_val"] = best_val
                save_training_checkpoint(best_path, model, embedder, meta)
            save_training_checkpoint(last_path, model, embedder, meta, optimizer=opt)

    embedder_after = module_arrays(embedder)
    if any(not np.array_equal(embedder_before[k], embedder_after[k]) for k in embedder_before):
        raise RuntimeError("frozen embedder weights changed during training")
    if not best_path.exists():  # every run has ≥ 1 epoch, so validation always ran
        save_training_checkpoint(best_path, model, embedder, meta)
    return TrainResult(
        best_checkpoint=best_path,
        last_checkpoint=last_path,
        log_path=log_path,
        best_val=best_val,
        final_val_si_sdri=val_si_sdri,
        first_epoch_train_loss=first_epoch_loss,
        final_epoch_train_loss=train_loss,
    )


def train_supervised(
    model: Exformer,
    embedder: SpeakerEmbedder,
    stream: ItemStream,
    val_items: Sequence[TrainItem],
    cfg: TrainConfig,
    out_dir: str | Path,
    resume_from: str | Path | None = None,
) -> TrainResult:
    """Stage 1: minimize the reconstruction loss on labeled items with a frozen embedder."""
    return _run_training(
        model, embedder, stream, val_items, cfg, out_dir, "stage1", _loss_supervised, resume_from
    )


def train_semi(
    stage1_checkpoint: str | Path,
    stream: ItemStream,
    val_items: Sequence[TrainItem],
    cfg: TrainConfig,
    out_dir: str | Path,
) -> TrainResult:
    """Stage 2: restore the stage-1 weights bit-exactly, then fine-tune with the
    combined objective on a mixed labeled/unlabeled stream. Validation stays
    labeled-only so the two stages are comparable."""
    model, embedder, meta = load_training_checkpoint(stage1_checkpoint)
    reference, _ = load_checkpoint(stage1_checkpoint)
    restored = module_arrays(model, "separator.")
    if any(not np.array_equal(restored[k], reference[k]) for k in restored):
        raise RuntimeError("stage-1 weights were not restored bit-exactly")
    return _run_training(model, embedder, stream, val_items, cfg, out_dir, "stage2", _loss_semi)


@dataclass(frozen=True)
class EmbedderTrainConfig:
    """GE2E pretraining settings (desk-scale batch defaults; full scale uses 46×4)."""

    n_speakers_per_batch: int = 4
    n_utts_per_speaker: int = 4
    utt_seconds: float = 4.0
    steps: int = 300
    init_lr: float = 5e-4
    grad_clip: float = 5.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_speakers_per_batch < 2 or self.n_utts_per_speaker < 2:
            raise ValueError("GE2E batches need ≥ 2 speakers and ≥ 2 utterances per speaker")
        if self.steps < 1:
            raise ValueError("steps must be ≥ 1")


def pretrain_embedder(
    records: Sequence[UtteranceRecord],
    embedder: SpeakerEmbedder,
    cfg: EmbedderTrainConfig,
    out_dir: str | Path,
) -> Path:
    """Minimize the GE2E loss over sampled speaker×utterance batches of mel crops.

    Writes `embedder.ckpt` (weights + config + loss trace endpoints) and a
    JSON-lines log; returns the checkpoint path. The final-step loss must come
    out below the first-step loss, otherwise the run errors out as diverged.
    """
    groups = {
        sid: utts
        for sid, utts in group_by_speaker(list(records)).items()
        if len(utts) >= cfg.n_utts_per_speaker
    }
    if len(groups) < cfg.n_speakers_per_batch:
        raise ValueError(
            f"need ≥ {cfg.n_speakers_per_batch} speakers with ≥ {cfg.n_utts_per_speaker} "
            f"utterances each, found {len(groups)}"
        )
    speakers = sorted(groups)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    dtype = next(embedder.parameters()).dtype
    crop_len = int(round(cfg.utt_seconds * embedder.sample_rate))
    cache: dict[str, Waveform] = {}

    def crop(rec: UtteranceRecord, rng: np.random.Generator) -> np.ndarray:
        if rec.utt_id not in cache:
            cache[rec.utt_id] = load_utterance(rec)
        samples = cache[rec.utt_id].samples
        if len(samples) <= crop_len:
            return np.pad(samples, (0, crop_len - len(samples)))
        start = int(rng.integers(0, len(samples) - crop_len + 1))
        return samples[start : start + crop_len]

    criterion = GE2ELoss()
    opt = torch.optim.Adam(list(embedder.parameters()) + list(criterion.parameters()), lr=cfg.init_lr)
    first_loss = math.nan
    last_loss = math.nan
    log_path = out_dir / "embedder_log.jsonl"
    embedder.train()
    with open(log_path, "w") as log_fh:
        for step in range(cfg.steps):
            rng = np.random.default_rng([_GE2E_TAG, cfg.seed, step])
            batch_speakers = [speakers[k] for k in rng.choice(len(speakers), cfg.n_speakers_per_batch, replace=False)]
            rows = []
            for sid in batch_speakers:
                utts = groups[sid]
                picks = rng.choice(len(utts), cfg.n_utts_per_speaker, replace=False)
                rows.append(np.stack([crop(utts[int(k)], rng) for k in picks]))
            batch = torch.as_tensor(np.stack(rows), dtype=dtype)  # (N, M, L)
            frames = log_mel(batch.reshape(-1, crop_len), embedder.mel, embedder.sample_rate)
            emb = embedder(frames).reshape(cfg.n_speakers_per_batch, cfg.n_utts_per_speaker, -1)
            loss = criterion(emb)
            if not torch.isfinite(loss):
                raise RuntimeError(f"non-finite GE2E loss at step {step}")
            opt.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(opt.param_groups[0]["params"], cfg.grad_clip)
            opt.step()
            last_loss = loss.detach().item()
            if step == 0:
                first_loss = last_loss
            log_fh.write(json.dumps({"step": step, "loss": last_loss}, sort_keys=True) + "\n")
    if not last_loss < first_loss:
        raise RuntimeError(
            f"embedder pretraining diverged: first-step loss {first_loss:.4f}, final {last_loss:.4f}"
        )
    ckpt_path = out_dir / "embedder.ckpt"
    arrays = module_arrays(embedder, "embedder.") | module_arrays(criterion, "ge2e.")
    save_checkpoint(
        ckpt_path,
        arrays,
        {
            "stage": "embedder",
            "embedder_config": asdict(embedder.cfg),
            "train_config": asdict(cfg),
            "sample_rate": embedder.sample_rate,
            "first_loss": first_loss,
            "final_loss": last_loss,
        },
    )
    return ckpt_path


def load_pretrained_embedder(path: str | Path) -> SpeakerEmbedder:
    arrays, meta = load_checkpoint(path)
    try:
        cfg = EmbedderConfig(**meta["embedder_config"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: not an embedder checkpoint ({exc})") from exc
    embedder = SpeakerEmbedder(cfg, sample_rate=int(meta.get("sample_rate", 8000)))
    load_module_arrays(embedder, arrays, "embedder.")
    _freeze(embedder)
    return embedder
