"""Scale-invariant SDR, the training objective and evaluation metric."""

from __future__ import annotations

import numpy as np

from .audio import Waveform

EPS = 1e-8


def _as_samples(x: Waveform | np.ndarray) -> np.ndarray:
    samples = x.samples if isinstance(x, Waveform) else np.asarray(x, dtype=np.float64)
    if samples.ndim != 1:
        raise ValueError("si_sdr expects 1-D signals")
    return samples


def si_sdr(reference: Waveform | np.ndarray, estimate: Waveform | np.ndarray, eps: float = EPS) -> float:
    """Scale-invariant signal-to-distortion ratio of `estimate` against `reference`, in dB.

    The reference is rescaled by the projection coefficient
    alpha = <estimate, reference> / ||reference||^2 and the ratio is
    ||alpha * reference||^2 over ||alpha * reference - estimate||^2. Signals are
    compared as-is (no mean removal). `eps` enters only as a floor on the
    denominators — relative for the distortion term, so perfect reconstruction
    caps at 10*log10(1/eps) = 80 dB at any scale and the clean-signal ratio is
    untouched.
    """
    s = _as_samples(reference)
    s_hat = _as_samples(estimate)
    if s.shape != s_hat.shape:
        raise ValueError(f"length mismatch: reference {s.shape} vs estimate {s_hat.shape}")
    if not np.any(s):
        raise ValueError("si_sdr is undefined for an all-zero reference")
    alpha = np.dot(s_hat, s) / max(np.dot(s, s), eps)
    target = alpha * s
    noise = target - s_hat
    t_pow = np.dot(target, target)
    n_pow = np.dot(noise, noise)
    if t_pow == 0.0 and n_pow == 0.0:  # all-zero estimate: no target energy, no distortion
        return float(10.0 * np.log10(eps))
    return float(10.0 * np.log10(max(t_pow, eps * n_pow) / max(n_pow, eps * t_pow)))


def si_sdr_improvement(
    reference: Waveform | np.ndarray,
    estimate: Waveform | np.ndarray,
    mixture: Waveform | np.ndarray,
    eps: float = EPS,
) -> float:
    """SI-SDR of the estimate minus SI-SDR of the unprocessed mixture."""
    return si_sdr(reference, estimate, eps) - si_sdr(reference, mixture, eps)
