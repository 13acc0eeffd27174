"""BLSTM speaker embedder and the GE2E contrastive loss used to pre-train it."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .audio import DEFAULT_MEL, DEFAULT_SAMPLE_RATE, MelConfig, Waveform, log_mel

_NORM_EPS = 1e-12
_MIN_SCALE = 1e-6

POOLING_MODES = ("edge_output", "final_state")


@dataclass(frozen=True)
class EmbedderConfig:
    """Sizes of the speaker-embedding network; defaults are the full-scale values."""

    n_blstm_layers: int = 3
    hidden_units: int = 768
    n_mels: int = 40
    embed_dim: int = 256
    # "edge_output" averages the BLSTM output at the first and last frames;
    # "final_state" concatenates the two directions' final hidden states instead.
    pooling: str = "edge_output"

    def __post_init__(self) -> None:
        for name in ("n_blstm_layers", "hidden_units", "n_mels", "embed_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be ≥ 1")
        if self.pooling not in POOLING_MODES:
            raise ValueError(f"pooling must be one of {POOLING_MODES}, got {self.pooling!r}")


class SpeakerEmbedder(nn.Module):
    """Log-mel → stacked BLSTM → first/last-frame pooling → linear → unit norm."""

    def __init__(self, cfg: EmbedderConfig | None = None, sample_rate: int = DEFAULT_SAMPLE_RATE):
        super().__init__()
        self.cfg = cfg or EmbedderConfig()
        self.sample_rate = sample_rate
        self.mel = replace(DEFAULT_MEL, n_mels=self.cfg.n_mels)
        self.blstm = nn.LSTM(
            input_size=self.cfg.n_mels,
            hidden_size=self.cfg.hidden_units,
            num_layers=self.cfg.n_blstm_layers,
            bidirectional=True,
            batch_first=True,
        )
        self.proj = nn.Linear(2 * self.cfg.hidden_units, self.cfg.embed_dim)

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        """Log-mel frames (T, n_mels) or (B, T, n_mels) → unit-norm embeddings (D,) / (B, D)."""
        squeeze = frames.dim() == 2
        if squeeze:
            frames = frames[None]
        out, (h_n, _) = self.blstm(frames)
        if self.cfg.pooling == "edge_output":
            pooled = 0.5 * (out[:, 0] + out[:, -1])
        else:
            pooled = torch.cat([h_n[-2], h_n[-1]], dim=-1)
        z = F.normalize(self.proj(pooled), dim=-1, eps=_NORM_EPS)
        if not torch.isfinite(z).all():
            raise RuntimeError("non-finite speaker embedding")
        return z[0] if squeeze else z

    def embed_waveform(self, x: torch.Tensor) -> torch.Tensor:
        """Embed raw samples (L,) or (B, L); differentiable w.r.t. x."""
        return self.forward(log_mel(x, self.mel, self.sample_rate))


def embed(w: Waveform, model: SpeakerEmbedder) -> np.ndarray:
    """Unit-norm embedding of a waveform under frozen weights."""
    dtype = next(model.parameters()).dtype
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            z = model.embed_waveform(torch.as_tensor(w.samples, dtype=dtype))
    finally:
        model.train(was_training)
    return z.numpy().astype(np.float64)


def ge2e_loss(
    embeddings: torch.Tensor,
    w: torch.Tensor | float = 10.0,
    b: torch.Tensor | float = -5.0,
) -> torch.Tensor:
    """Softmax contrastive loss over an (n_speakers, n_utts, D) batch of unit-norm rows.

    Each utterance is scored against every speaker centroid (its own centroid
    excludes the utterance itself) with similarity w·cos + b, and the loss is
    the mean cross-entropy of picking the right speaker.
    """
    if embeddings.dim() != 3:
        raise ValueError(f"expected (n_speakers, n_utts, dim), got shape {tuple(embeddings.shape)}")
    n_spk, n_utt, _ = embeddings.shape
    if n_spk < 2:
        raise ValueError("contrast is undefined with fewer than 2 speakers")
    if n_utt < 2:
        raise ValueError("self-exclusive centroids need at least 2 utterances per speaker")
    norms = torch.linalg.vector_norm(embeddings, dim=-1)
    if not torch.allclose(norms, torch.ones_like(norms), atol=1e-3):
        raise ValueError("embeddings must be unit-norm")

    w = torch.as_tensor(w, dtype=embeddings.dtype).clamp_min(_MIN_SCALE)
    b = torch.as_tensor(b, dtype=embeddings.dtype)

    queries = F.normalize(embeddings, dim=-1, eps=_NORM_EPS)
    centroids = F.normalize(embeddings.mean(dim=1), dim=-1, eps=_NORM_EPS)  # (N, D)
    exclusive = F.normalize(
        (embeddings.sum(dim=1, keepdim=True) - embeddings) / (n_utt - 1), dim=-1, eps=_NORM_EPS
    )  # (N, M, D)

    cos = queries @ centroids.T  # (N, M, N)
    own = torch.arange(n_spk, device=embeddings.device)
    cos = cos.clone()
    cos[own, :, own] = (queries * exclusive).sum(dim=-1)

    logits = (w * cos + b).reshape(n_spk * n_utt, n_spk)
    labels = own.repeat_interleave(n_utt)
    return F.cross_entropy(logits, labels)


class GE2ELoss(nn.Module):
    """ge2e_loss with the similarity scale and bias as trainable parameters."""

    def __init__(self, init_w: float = 10.0, init_b: float = -5.0):
        super().__init__()
        self.w = nn.Parameter(torch.tensor(float(init_w)))
        self.b = nn.Parameter(torch.tensor(float(init_b)))

    def forward(self, embeddings: torch.Tensor) -> torch.Tensor:
        return ge2e_loss(embeddings, self.w, self.b)
