"""Training objectives: SI-SDR reconstruction, embedding triplet hinge, and their combination."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .audio import Waveform
from .embedder import SpeakerEmbedder
from .metrics import EPS
from .mixing import TrainItem

_DIST_EPS = 1e-12


@dataclass(frozen=True)
class LossWeights:
    """lambda_s scales the reconstruction term, lambda_u the embedder term; gamma is the hinge margin."""

    lambda_s: float = 1.0
    lambda_u: float = 0.05
    gamma: float = 1.0


def _as_tensor(x: torch.Tensor | Waveform | np.ndarray) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    if isinstance(x, Waveform):
        return torch.as_tensor(x.samples)
    return torch.as_tensor(np.asarray(x, dtype=np.float64))


def si_sdr_tensor(reference: torch.Tensor, estimate: torch.Tensor, eps: float = EPS) -> torch.Tensor:
    """Differentiable SI-SDR in dB; same floor-style stabilization as the numpy metric."""
    if reference.shape != estimate.shape or reference.dim() != 1:
        raise ValueError("si_sdr expects two 1-D tensors of equal length")
    dtype = torch.promote_types(reference.dtype, estimate.dtype)
    reference = reference.to(dtype)
    estimate = estimate.to(dtype)
    alpha = (estimate @ reference) / torch.clamp(reference @ reference, min=eps)
    target = alpha * reference
    noise = target - estimate
    t_pow = target @ target
    n_pow = noise @ noise
    ratio = torch.maximum(t_pow, eps * n_pow) / torch.maximum(n_pow, eps * t_pow)
    return 10.0 * torch.log10(ratio)


def si_sdr_loss(
    target: torch.Tensor | Waveform,
    residual: torch.Tensor | Waveform,
    est_target: torch.Tensor | Waveform,
    est_residual: torch.Tensor | Waveform,
    eps: float = EPS,
) -> torch.Tensor:
    """Reconstruction objective: half the summed negative SI-SDR of both sources."""
    s_t, s_r = _as_tensor(target), _as_tensor(residual)
    e_t, e_r = _as_tensor(est_target), _as_tensor(est_residual)
    return 0.5 * (-si_sdr_tensor(s_t, e_t, eps) - si_sdr_tensor(s_r, e_r, eps))


def triplet_embedder_loss(
    z_e: torch.Tensor,
    z_t: torch.Tensor,
    z_r: torch.Tensor,
    gamma: float = 1.0,
) -> torch.Tensor:
    """Hinge demanding the target embedding sit closer to the enrollment than the residual's.

    max{‖z_e − z_t‖ − ‖z_e − z_r‖ + gamma, 0}, with an epsilon inside the norms
    so the gradient stays finite at zero distance.
    """
    z_e, z_t, z_r = _as_tensor(z_e), _as_tensor(z_t), _as_tensor(z_r)
    if not (z_e.shape == z_t.shape == z_r.shape):
        raise ValueError("embedding dimensions must match")
    d_target = torch.sqrt(torch.sum((z_e - z_t) ** 2) + _DIST_EPS)
    d_residual = torch.sqrt(torch.sum((z_e - z_r) ** 2) + _DIST_EPS)
    return torch.clamp(d_target - d_residual + gamma, min=0.0)


def combine_semi_loss(
    recon: torch.Tensor | None,
    triplet: torch.Tensor,
    labeled: bool,
    weights: LossWeights,
) -> torch.Tensor:
    """Weighted total; the reconstruction term enters only for labeled items."""
    if not labeled:
        return weights.lambda_u * triplet
    if recon is None:
        raise ValueError("labeled item requires a reconstruction loss value")
    return weights.lambda_s * recon + weights.lambda_u * triplet


def semi_supervised_loss(
    item: TrainItem,
    est_target: torch.Tensor,
    est_residual: torch.Tensor,
    embedder: SpeakerEmbedder,
    weights: LossWeights = LossWeights(),
) -> torch.Tensor:
    """Per-item objective: embedder triplet always, reconstruction only when labeled.

    The embedder is applied to both estimates with gradients flowing back into
    them; its own parameters are expected to be frozen by the caller.
    """
    if est_target.shape[-1] != len(item.mixture) or est_residual.shape[-1] != len(item.mixture):
        raise ValueError("estimate lengths must match the mixture")
    dtype = next(embedder.parameters()).dtype
    with torch.no_grad():
        z_e = embedder.embed_waveform(torch.as_tensor(item.enrollment.samples, dtype=dtype))
    z_t = embedder.embed_waveform(est_target.to(dtype))
    z_r = embedder.embed_waveform(est_residual.to(dtype))
    triplet = triplet_embedder_loss(z_e, z_t, z_r, weights.gamma)
    if not item.labeled:
        return combine_semi_loss(None, triplet, False, weights)
    recon = si_sdr_loss(item.target, item.residual, est_target, est_residual)
    return combine_semi_loss(recon, triplet, True, weights)
