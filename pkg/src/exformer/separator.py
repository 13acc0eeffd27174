"""Time-domain target-speaker extractor.

Encoder → chunk segmentation → B dual-path transformer blocks, each preceded by
speaker-embedding fusion → mask head → overlap-add → masked decoding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .audio import Waveform
from .embedder import SpeakerEmbedder

FUSION_MODES = ("concat", "mult", "add")


@dataclass(frozen=True)
class ExformerConfig:
    """Separator sizes; defaults are the full-scale values."""

    feature_dim: int = 256
    kernel: int = 16
    stride: int = 8
    chunk_len: int = 250
    n_blocks: int = 2
    layers_per_path: int = 8
    n_heads: int = 8
    ff_dim: int = 1024
    n_sources: int = 2
    fusion_mode: str = "concat"
    embed_dim: int = 256
    share_fusion_weights: bool = False
    use_positional_encoding: bool = True

    def __post_init__(self) -> None:
        for name in (
            "feature_dim", "kernel", "stride", "chunk_len",
            "n_blocks", "layers_per_path", "n_heads", "ff_dim", "embed_dim",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be ≥ 1")
        if self.fusion_mode not in FUSION_MODES:
            raise ValueError(f"fusion_mode must be one of {FUSION_MODES}, got {self.fusion_mode!r}")
        if self.feature_dim % self.n_heads:
            raise ValueError("feature_dim must be divisible by n_heads")
        if self.chunk_len % 2:
            raise ValueError("chunk_len must be even (chunks overlap by half)")
        if self.n_sources != 2:
            raise ValueError("exactly two output sources (target, residual) are supported")


@dataclass
class Segmented:
    """Chunked latent (feature_dim, chunk_len, n_chunks) plus the pre-padding frame count."""

    values: torch.Tensor
    valid_frames: int


def segment(h: torch.Tensor, chunk_len: int) -> Segmented:
    """Split (F, T) into half-overlapping chunks of `chunk_len`, zero-padded on the right."""
    if h.dim() != 2:
        raise ValueError(f"expected (features, frames), got shape {tuple(h.shape)}")
    if chunk_len % 2:
        raise ValueError("chunk_len must be even")
    hop = chunk_len // 2
    n_frames = h.shape[1]
    n_chunks = 1 if n_frames <= chunk_len else 1 + math.ceil((n_frames - chunk_len) / hop)
    padded = F.pad(h, (0, chunk_len + (n_chunks - 1) * hop - n_frames))
    chunks = padded.unfold(1, chunk_len, hop)  # (F, S, K)
    return Segmented(chunks.permute(0, 2, 1).contiguous(), valid_frames=n_frames)


def overlap_add(seg: Segmented) -> torch.Tensor:
    """Coverage-normalized inverse of `segment`: (F, K, S) → (F, valid_frames)."""
    feat, chunk_len, n_chunks = seg.values.shape
    hop = chunk_len // 2
    t_pad = chunk_len + (n_chunks - 1) * hop
    cols = seg.values.reshape(1, feat * chunk_len, n_chunks)
    summed = F.fold(cols, output_size=(1, t_pad), kernel_size=(1, chunk_len), stride=(1, hop))
    coverage = F.fold(
        torch.ones(1, chunk_len, n_chunks, dtype=seg.values.dtype, device=seg.values.device),
        output_size=(1, t_pad),
        kernel_size=(1, chunk_len),
        stride=(1, hop),
    )
    out = (summed / coverage).reshape(feat, t_pad)
    return out[:, : seg.valid_frames]


def overlap_add_masks(seg: Segmented) -> torch.Tensor:
    """Mask reconstruction: overlap-add followed by ReLU, so masks are non-negative."""
    return torch.relu(overlap_add(seg))


def sinusoidal_positions(length: int, dim: int, dtype: torch.dtype, device: torch.device) -> torch.Tensor:
    """Interleaved sine/cosine positional encoding of shape (length, dim)."""
    position = torch.arange(length, dtype=dtype, device=device)[:, None]
    half = (dim + 1) // 2
    freq = torch.exp(torch.arange(half, dtype=dtype, device=device) * (-math.log(10000.0) * 2.0 / dim))
    angles = position * freq
    pe = torch.zeros(length, dim, dtype=dtype, device=device)
    pe[:, 0::2] = torch.sin(angles)
    pe[:, 1::2] = torch.cos(angles[:, : dim // 2])
    return pe


class TransformerLayer(nn.Module):
    """Pre-norm encoder layer; positional encoding is added to the input before attention."""

    def __init__(self, d_model: int, n_heads: int, ff_dim: int, use_positional_encoding: bool = True):
        super().__init__()
        self.use_pe = use_positional_encoding
        self.attn_norm = nn.LayerNorm(d_model)
        self.attn = nn.MultiheadAttention(d_model, n_heads, batch_first=True)
        self.ff_norm = nn.LayerNorm(d_model)
        self.ff = nn.Sequential(nn.Linear(d_model, ff_dim), nn.GELU(), nn.Linear(ff_dim, d_model))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        # x: (batch, seq, d_model)
        if self.use_pe:
            x = x + sinusoidal_positions(x.shape[1], x.shape[2], x.dtype, x.device)
        y = self.attn_norm(x)
        x = x + self.attn(y, y, y, need_weights=False)[0]
        x = x + self.ff(self.ff_norm(x))
        return x


class DualPathBlock(nn.Module):
    """Intra-chunk modelling within each chunk, then inter-chunk modelling across chunks."""

    def __init__(self, cfg: ExformerConfig):
        super().__init__()

        def path() -> nn.ModuleList:
            return nn.ModuleList(
                TransformerLayer(cfg.feature_dim, cfg.n_heads, cfg.ff_dim, cfg.use_positional_encoding)
                for _ in range(cfg.layers_per_path)
            )

        self.intra = path()
        self.inter = path()

    def forward(self, seg: Segmented) -> Segmented:
        x = seg.values.permute(2, 1, 0)  # (S, K, F): each chunk is one sequence
        for layer in self.intra:
            x = layer(x)
        x = x.permute(1, 0, 2)  # (K, S, F): each frame offset attends across chunks
        for layer in self.inter:
            x = layer(x)
        return Segmented(x.permute(2, 0, 1).contiguous(), seg.valid_frames)


class FusionLayer(nn.Module):
    """Injects a speaker embedding into every frame of the segmented representation."""

    def __init__(self, feature_dim: int, embed_dim: int, mode: str):
        super().__init__()
        if mode not in FUSION_MODES:
            raise ValueError(f"fusion mode must be one of {FUSION_MODES}, got {mode!r}")
        self.mode = mode
        in_dim = feature_dim + embed_dim if mode == "concat" else embed_dim
        self.proj = nn.Linear(in_dim, feature_dim)

    def forward(self, seg: Segmented, z_e: torch.Tensor) -> Segmented:
        if z_e.dim() != 1:
            raise ValueError("expected a single embedding vector")
        v = seg.values
        if self.mode == "concat":
            z = z_e[:, None, None].expand(-1, v.shape[1], v.shape[2])
            out = self.proj(torch.cat([v, z], dim=0).permute(1, 2, 0)).permute(2, 0, 1)
        elif self.mode == "mult":
            out = v * self.proj(z_e)[:, None, None]
        else:
            out = v + self.proj(z_e)[:, None, None]
        return Segmented(out.contiguous(), seg.valid_frames)


class Exformer(nn.Module):
    """Conditioned two-source separator; forward maps (mixture, embedding) → (2, L) estimates."""

    def __init__(self, cfg: ExformerConfig | None = None):
        super().__init__()
        self.cfg = cfg or ExformerConfig()
        cfg = self.cfg
        self.encoder = nn.Conv1d(1, cfg.feature_dim, cfg.kernel, stride=cfg.stride)
        if cfg.share_fusion_weights:
            shared = FusionLayer(cfg.feature_dim, cfg.embed_dim, cfg.fusion_mode)
            self.fusions = nn.ModuleList([shared] * cfg.n_blocks)
        else:
            self.fusions = nn.ModuleList(
                FusionLayer(cfg.feature_dim, cfg.embed_dim, cfg.fusion_mode) for _ in range(cfg.n_blocks)
            )
        self.blocks = nn.ModuleList(DualPathBlock(cfg) for _ in range(cfg.n_blocks))
        self.mask_conv = nn.Conv2d(cfg.feature_dim, cfg.n_sources * cfg.feature_dim, kernel_size=1)
        self.decoder = nn.ConvTranspose1d(cfg.feature_dim, 1, cfg.kernel, stride=cfg.stride, bias=False)

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        """(L,) → non-negative latent (F, T) with T = 1 + (L − kernel) // stride."""
        if x.dim() != 1:
            raise ValueError("encode expects a 1-D waveform tensor")
        if x.shape[0] < self.cfg.kernel:
            raise ValueError(
                f"input of {x.shape[0]} samples is shorter than the {self.cfg.kernel}-sample encoder kernel"
            )
        return torch.relu(self.encoder(x[None, None, :]))[0]

    def mask_head(self, seg: Segmented) -> list[Segmented]:
        """1×1 2-D convolution to n_sources · F channels, split per source."""
        m = self.mask_conv(seg.values[None])[0]
        return [Segmented(c.contiguous(), seg.valid_frames) for c in m.chunk(self.cfg.n_sources, dim=0)]

    def decode(self, h: torch.Tensor, length: int) -> torch.Tensor:
        """(F, T) → (length,) via transposed convolution, trimmed or padded to `length`."""
        y = self.decoder(h[None])[0, 0]
        if y.shape[0] >= length:
            return y[:length]
        return F.pad(y, (0, length - y.shape[0]))

    def forward(self, x: torch.Tensor, z_e: torch.Tensor) -> torch.Tensor:
        h = self.encode(x)
        seg = segment(h, self.cfg.chunk_len)
        for fusion, block in zip(self.fusions, self.blocks):
            seg = block(fusion(seg, z_e))
        masks = [overlap_add_masks(m) for m in self.mask_head(seg)]
        return torch.stack([self.decode(mask * h, x.shape[0]) for mask in masks])


def extract(
    x: Waveform, x_e: Waveform, model: Exformer, embedder: SpeakerEmbedder
) -> tuple[Waveform, Waveform]:
    """Full extraction pipeline on one mixture/enrollment pair with frozen weights.

    Output index 0 is the target estimate, index 1 the residual; the model is
    conditioned, so no permutation search is involved. Training is scale
    invariant, so the raw network output carries an arbitrary gain; both
    estimates are rescaled by the single factor that best reconstructs the
    mixture from their sum, which puts them at the mixture's own level.
    """
    dtype = next(model.parameters()).dtype
    model_mode, embedder_mode = model.training, embedder.training
    model.eval()
    embedder.eval()
    try:
        with torch.no_grad():
            z_e = embedder.embed_waveform(torch.as_tensor(x_e.samples, dtype=dtype))
            est = model(torch.as_tensor(x.samples, dtype=dtype), z_e)
    finally:
        model.train(model_mode)
        embedder.train(embedder_mode)
    if not torch.isfinite(est).all():
        raise RuntimeError("non-finite separator output")
    est = est.to(torch.float64).numpy()
    total = est.sum(axis=0)
    denom = float(np.dot(total, total))
    if denom > 0.0:
        est = est * (float(np.dot(total, x.samples)) / denom)
    return Waveform(est[0], x.sample_rate), Waveform(est[1], x.sample_rate)
