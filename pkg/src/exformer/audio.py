"""Waveform container, PCM16 WAV I/O, log-mel frontend, and speed perturbation."""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

DEFAULT_SAMPLE_RATE = 8000

# Resampling factors outside this band are rejected (5% perturbation).
SPEED_FACTOR_MIN = 0.95
SPEED_FACTOR_MAX = 1.05

_PCM16_SCALE = 32767.0


class AudioFormatError(ValueError):
    """Raised for WAV content this toolkit does not consume (non-mono, non-PCM16, rate mismatch)."""


@dataclass
class Waveform:
    """Mono time-domain signal. Samples are float64, nominally in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"waveform must be 1-D, got shape {samples.shape}")
        if samples.size < 1:
            raise ValueError("waveform must contain at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        self.samples = samples
        self.sample_rate = int(self.sample_rate)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


def save_wav(path: str | Path, w: Waveform) -> None:
    """Write a waveform as mono 16-bit PCM RIFF. Samples are clipped to [-1, 1]."""
    clipped = np.clip(w.samples, -1.0, 1.0)
    pcm = np.round(clipped * _PCM16_SCALE).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(w.sample_rate)
        fh.writeframes(pcm.tobytes())


def load_wav(path: str | Path, expected_sample_rate: int | None = None) -> Waveform:
    """Read a mono 16-bit PCM WAV file.

    A configured `expected_sample_rate` that disagrees with the file raises
    AudioFormatError; no resampling is attempted.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such audio file: {path}")
    try:
        with wave.open(str(path), "rb") as fh:
            if fh.getnchannels() != 1:
                raise AudioFormatError(f"{path}: expected mono, got {fh.getnchannels()} channels")
            if fh.getsampwidth() != 2 or fh.getcomptype() != "NONE":
                raise AudioFormatError(f"{path}: only uncompressed 16-bit PCM is supported")
            sample_rate = fh.getframerate()
            data = fh.readframes(fh.getnframes())
    except wave.Error as exc:
        raise AudioFormatError(f"{path}: not a readable WAV file ({exc})") from exc
    if expected_sample_rate is not None and sample_rate != expected_sample_rate:
        raise AudioFormatError(
            f"{path}: sample rate {sample_rate} Hz does not match the configured "
            f"{expected_sample_rate} Hz (resampling is not performed)"
        )
    samples = np.frombuffer(data, dtype="<i2").astype(np.float64) / _PCM16_SCALE
    return Waveform(samples, sample_rate)


@dataclass(frozen=True)
class MelConfig:
    """Log-mel frontend settings: 25 ms window / 10 ms hop at 8 kHz, 40 filters."""

    win_length: int = 200
    hop_length: int = 80
    n_fft: int = 256
    n_mels: int = 40
    fmin: float = 0.0
    fmax: float | None = None  # None -> Nyquist
    log_floor: float = 1e-6


DEFAULT_MEL = MelConfig()


def _hz_to_mel(f: np.ndarray | float) -> np.ndarray | float:
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def _mel_to_hz(m: np.ndarray | float) -> np.ndarray | float:
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def mel_filterbank(cfg: MelConfig = DEFAULT_MEL, sample_rate: int = DEFAULT_SAMPLE_RATE) -> np.ndarray:
    """Triangular HTK-scale filterbank, shape (n_mels, n_fft // 2 + 1)."""
    fmax = cfg.fmax if cfg.fmax is not None else sample_rate / 2.0
    n_bins = cfg.n_fft // 2 + 1
    bin_hz = np.arange(n_bins) * sample_rate / cfg.n_fft
    edges = _mel_to_hz(np.linspace(_hz_to_mel(cfg.fmin), _hz_to_mel(fmax), cfg.n_mels + 2))
    fbank = np.zeros((cfg.n_mels, n_bins))
    for m in range(cfg.n_mels):
        lo, center, hi = edges[m], edges[m + 1], edges[m + 2]
        up = (bin_hz - lo) / (center - lo)
        down = (hi - bin_hz) / (hi - center)
        fbank[m] = np.maximum(0.0, np.minimum(up, down))
    return fbank


_MEL_KERNEL_CACHE: dict[tuple, tuple[torch.Tensor, torch.Tensor]] = {}


def _mel_kernels(cfg: MelConfig, sample_rate: int, dtype: torch.dtype) -> tuple[torch.Tensor, torch.Tensor]:
    key = (cfg, sample_rate, dtype)
    if key not in _MEL_KERNEL_CACHE:
        n = np.arange(cfg.win_length)
        window = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / cfg.win_length)  # periodic Hann
        fbank = mel_filterbank(cfg, sample_rate)
        _MEL_KERNEL_CACHE[key] = (
            torch.as_tensor(window, dtype=dtype),
            torch.as_tensor(fbank.T, dtype=dtype),  # (n_bins, n_mels)
        )
    return _MEL_KERNEL_CACHE[key]


def log_mel(
    x: torch.Tensor,
    cfg: MelConfig = DEFAULT_MEL,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> torch.Tensor:
    """Differentiable log-mel frames of a waveform tensor.

    x: (..., L) -> (..., n_frames, n_mels) with n_frames = 1 + (L - win) // hop.
    """
    length = x.shape[-1]
    if length < cfg.win_length:
        raise ValueError(
            f"waveform of {length} samples is shorter than one {cfg.win_length}-sample analysis window"
        )
    window, fbank = _mel_kernels(cfg, sample_rate, x.dtype)
    frames = x.unfold(-1, cfg.win_length, cfg.hop_length) * window  # (..., n_frames, win)
    spectrum = torch.fft.rfft(frames, n=cfg.n_fft)
    power = spectrum.real**2 + spectrum.imag**2  # avoids the abs() gradient singularity at 0
    mel = power @ fbank
    return torch.log(torch.clamp(mel, min=cfg.log_floor))


def mel_spectrogram(w: Waveform, cfg: MelConfig = DEFAULT_MEL) -> np.ndarray:
    """Log-mel frames of a waveform, shape (n_frames, n_mels)."""
    with torch.no_grad():
        frames = log_mel(torch.from_numpy(w.samples), cfg, w.sample_rate)
    return frames.numpy()


def speed_perturb(w: Waveform, factor: float) -> Waveform:
    """Resample by linear interpolation; output length = round(L / factor)."""
    if not (SPEED_FACTOR_MIN <= factor <= SPEED_FACTOR_MAX):
        raise ValueError(
            f"speed factor {factor} outside [{SPEED_FACTOR_MIN}, {SPEED_FACTOR_MAX}]"
        )
    if factor == 1.0:
        return Waveform(w.samples.copy(), w.sample_rate)
    n_out = int(round(len(w) / factor))
    positions = np.arange(n_out) * factor
    resampled = np.interp(positions, np.arange(len(w)), w.samples)
    return Waveform(resampled, w.sample_rate)
