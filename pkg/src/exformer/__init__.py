"""Target speaker extraction with a dual-path transformer separator.

A BLSTM speaker embedder conditions the separator through concat / mult / add
fusion at the start of each dual-path block; training runs supervised on
simulated mixtures, optionally followed by a semi-supervised stage that learns
from unlabeled mixtures through an embedding triplet loss.
"""

from .audio import (
    DEFAULT_SAMPLE_RATE,
    AudioFormatError,
    MelConfig,
    Waveform,
    load_wav,
    log_mel,
    mel_filterbank,
    mel_spectrogram,
    save_wav,
    speed_perturb,
)
from .checkpoint import load_checkpoint, load_module_arrays, module_arrays, save_checkpoint
from .config import RunConfig, apply_overrides, build_run_config, load_run_config, save_run_config
from .corpus import (
    UtteranceRecord,
    generate_corpus,
    group_by_speaker,
    load_utterance,
    read_manifest,
    synth_speaker_utterance,
    write_manifest,
)
from .embedder import EmbedderConfig, GE2ELoss, SpeakerEmbedder, embed, ge2e_loss
from .losses import (
    LossWeights,
    combine_semi_loss,
    semi_supervised_loss,
    si_sdr_loss,
    si_sdr_tensor,
    triplet_embedder_loss,
)
from .metrics import si_sdr, si_sdr_improvement
from .mixing import MixSpec, TrainItem, dynamic_mix
from .separator import (
    FUSION_MODES,
    DualPathBlock,
    Exformer,
    ExformerConfig,
    FusionLayer,
    Segmented,
    TransformerLayer,
    extract,
    overlap_add,
    overlap_add_masks,
    segment,
    sinusoidal_positions,
)
from .training import (
    BernoulliUnlabeledStream,
    DynamicMixStream,
    EmbedderTrainConfig,
    EvalReport,
    FixedItemStream,
    MixingConfig,
    SchedulerState,
    TrainConfig,
    TrainResult,
    evaluate,
    load_pretrained_embedder,
    load_training_checkpoint,
    make_validation_items,
    model_separate_fn,
    pretrain_embedder,
    save_training_checkpoint,
    scheduler_step,
    stage2_defaults,
    train_semi,
    train_supervised,
)

__version__ = "0.1.0"

__all__ = [
    "AudioFormatError",
    "BernoulliUnlabeledStream",
    "DEFAULT_SAMPLE_RATE",
    "DualPathBlock",
    "DynamicMixStream",
    "EmbedderConfig",
    "EmbedderTrainConfig",
    "EvalReport",
    "Exformer",
    "ExformerConfig",
    "FUSION_MODES",
    "FixedItemStream",
    "FusionLayer",
    "GE2ELoss",
    "LossWeights",
    "MelConfig",
    "MixSpec",
    "MixingConfig",
    "RunConfig",
    "SchedulerState",
    "Segmented",
    "SpeakerEmbedder",
    "TrainConfig",
    "TrainItem",
    "TrainResult",
    "TransformerLayer",
    "UtteranceRecord",
    "Waveform",
    "apply_overrides",
    "build_run_config",
    "combine_semi_loss",
    "dynamic_mix",
    "embed",
    "evaluate",
    "extract",
    "ge2e_loss",
    "generate_corpus",
    "group_by_speaker",
    "load_checkpoint",
    "load_module_arrays",
    "load_pretrained_embedder",
    "load_run_config",
    "load_training_checkpoint",
    "load_utterance",
    "load_wav",
    "log_mel",
    "make_validation_items",
    "mel_filterbank",
    "mel_spectrogram",
    "model_separate_fn",
    "module_arrays",
    "overlap_add",
    "overlap_add_masks",
    "pretrain_embedder",
    "read_manifest",
    "save_checkpoint",
    "save_run_config",
    "save_training_checkpoint",
    "save_wav",
    "scheduler_step",
    "segment",
    "semi_supervised_loss",
    "si_sdr",
    "si_sdr_improvement",
    "si_sdr_loss",
    "si_sdr_tensor",
    "sinusoidal_positions",
    "speed_perturb",
    "stage2_defaults",
    "synth_speaker_utterance",
    "train_semi",
    "train_supervised",
    "triplet_embedder_loss",
    "write_manifest",
]
