"""On-the-fly two-speaker mixture simulation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import Waveform

# Samples are snapped to this grid (in float64) before summation so that
# mixture = target + residual holds bit-wise, not just approximately.
_QUANT_SCALE = 2.0**40
_MAX_CROP_RETRIES = 10


@dataclass(frozen=True)
class MixSpec:
    """Target-over-interference SNR in dB, crop length, and the draw seed."""

    snr_db: float
    segment_seconds: float = 3.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.segment_seconds <= 0:
            raise ValueError("segment_seconds must be positive")


@dataclass
class TrainItem:
    """One training example: mixture plus enrollment, with references when labeled."""

    mixture: Waveform
    enrollment: Waveform
    target: Waveform | None = None
    residual: Waveform | None = None
    labeled: bool = True

    def __post_init__(self) -> None:
        if self.labeled:
            if self.target is None or self.residual is None:
                raise ValueError("labeled item requires target and residual references")
            if len(self.target) != len(self.mixture) or len(self.residual) != len(self.mixture):
                raise ValueError("reference lengths must match the mixture")
        elif self.target is not None or self.residual is not None:
            raise ValueError("unlabeled item must not carry reference signals")


def _quantize(x: np.ndarray) -> np.ndarray:
    return np.round(x * _QUANT_SCALE) / _QUANT_SCALE


def _crop_or_pad(samples: np.ndarray, n: int, rng: np.random.Generator, what: str) -> np.ndarray:
    if len(samples) >= n:
        for _ in range(_MAX_CROP_RETRIES):
            start = int(rng.integers(0, len(samples) - n + 1))
            seg = samples[start : start + n]
            if np.any(seg):
                return seg.copy()
        raise ValueError(f"{what}: could not find a non-silent {n}-sample crop")
    if not np.any(samples):
        raise ValueError(f"{what}: source is all-zero")
    pad = n - len(samples)
    left = pad // 2
    return np.pad(samples, (left, pad - left))


def dynamic_mix(src_a: Waveform, src_b: Waveform, spec: MixSpec, enrollment: Waveform) -> TrainItem:
    """Crop both sources to the segment length, scale src_b to the requested SNR, add.

    src_a becomes the target, scaled src_b the residual. Sources shorter than the
    segment are zero-padded symmetrically. Deterministic given spec.seed.
    """
    if src_a.sample_rate != src_b.sample_rate or enrollment.sample_rate != src_a.sample_rate:
        raise ValueError("sources and enrollment must share a sample rate")
    sr = src_a.sample_rate
    n = int(round(spec.segment_seconds * sr))
    rng = np.random.default_rng([0xD17E, int(spec.seed)])
    target = _crop_or_pad(src_a.samples, n, rng, "target source")
    interference = _crop_or_pad(src_b.samples, n, rng, "interference source")

    p_target = float(np.mean(target**2))
    p_interf = float(np.mean(interference**2))
    gain = np.sqrt(p_target / (p_interf * 10.0 ** (spec.snr_db / 10.0)))

    target = _quantize(target)
    residual = _quantize(gain * interference)
    mixture = target + residual
    return TrainItem(
        mixture=Waveform(mixture, sr),
        enrollment=enrollment,
        target=Waveform(target, sr),
        residual=Waveform(residual, sr),
        labeled=True,
    )
