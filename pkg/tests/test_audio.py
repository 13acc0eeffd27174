"""Waveform container, WAV round trips, mel features, and speed perturbation."""

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from exformer.audio import (
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


class TestWaveform:
    def test_casts_to_float64(self):
        w = Waveform(np.zeros(10, dtype=np.float32), 8000)
        assert w.samples.dtype == np.float64

    def test_len_and_duration(self):
        w = Waveform(np.zeros(4000), 8000)
        assert len(w) == 4000

    def test_rejects_2d(self):
        with pytest.raises(ValueError):
            Waveform(np.zeros((2, 10)), 8000)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Waveform(np.array([0.0, np.nan]), 8000)

    def test_rejects_bad_sample_rate(self):
        with pytest.raises(ValueError):
            Waveform(np.zeros(10), 0)


class TestWavIO:
    def test_roundtrip_within_quantization(self, tmp_path):
        rng = np.random.default_rng(0)
        w = Waveform(rng.uniform(-0.9, 0.9, 4000), 8000)
        path = tmp_path / "x.wav"
        save_wav(path, w)
        back = load_wav(path)
        assert back.sample_rate == 8000
        assert len(back) == len(w)
        assert np.abs(back.samples - w.samples).max() <= 1.0 / 32767 + 1e-12

    def test_roundtrip_is_idempotent(self, tmp_path):
        # A signal already on the 16-bit grid survives the trip exactly.
        rng = np.random.default_rng(1)
        w = Waveform(rng.integers(-30000, 30000, 500) / 32767.0, 8000)
        save_wav(tmp_path / "x.wav", w)
        back = load_wav(tmp_path / "x.wav")
        assert np.array_equal(back.samples, w.samples)

    def test_sample_rate_check(self, tmp_path):
        save_wav(tmp_path / "x.wav", Waveform(np.zeros(100), 16000))
        with pytest.raises(AudioFormatError):
            load_wav(tmp_path / "x.wav", expected_sample_rate=8000)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_wav(tmp_path / "nope.wav")


class TestMel:
    def test_filterbank_shape(self):
        fb = mel_filterbank()
        assert fb.shape == (40, 256 // 2 + 1)
        assert np.all(fb >= 0)

    def test_filterbank_covers_every_band(self):
        fb = mel_filterbank()
        assert np.all(fb.sum(axis=1) > 0)

    def test_log_mel_shape(self):
        x = torch.randn(24000, dtype=torch.float64)
        m = log_mel(x)
        frames = (24000 - 200) // 80 + 1
        assert m.shape == (frames, 40)
        assert torch.isfinite(m).all()

    def test_log_mel_floor(self):
        m = log_mel(torch.zeros(400))
        assert torch.allclose(m, torch.full_like(m, float(np.log(1e-6))))

    def test_log_mel_differentiable(self):
        x = torch.randn(600, dtype=torch.float64, requires_grad=True)
        log_mel(x).sum().backward()
        assert x.grad is not None and torch.isfinite(x.grad).all()

    def test_log_mel_batched_matches_single(self):
        x = torch.randn(2, 800, dtype=torch.float64)
        batch = log_mel(x)
        singles = torch.stack([log_mel(x[0]), log_mel(x[1])])
        assert torch.allclose(batch, singles)

    def test_mel_spectrogram_matches_log_mel(self):
        rng = np.random.default_rng(2)
        w = Waveform(rng.standard_normal(1600), DEFAULT_SAMPLE_RATE)
        m = mel_spectrogram(w)
        t = log_mel(torch.tensor(w.samples)).numpy()
        assert np.allclose(m, t)

    def test_too_short_input(self):
        with pytest.raises(ValueError):
            log_mel(torch.zeros(199))

    def test_custom_band_count(self):
        cfg = MelConfig(n_mels=24)
        m = log_mel(torch.randn(800), cfg)
        assert m.shape[1] == 24


class TestSpeedPerturb:
    def test_worked_lengths(self):
        w = Waveform(np.sin(np.linspace(0, 100, 1000)), 8000)
        assert len(speed_perturb(w, 1.05)) == 952
        assert len(speed_perturb(w, 0.95)) == 1053

    def test_identity_factor(self):
        w = Waveform(np.random.default_rng(3).standard_normal(500), 8000)
        out = speed_perturb(w, 1.0)
        assert np.array_equal(out.samples, w.samples)
        assert out.samples is not w.samples  # defensive copy

    def test_preserves_sample_rate(self):
        w = Waveform(np.zeros(1000), 8000)
        assert speed_perturb(w, 1.02).sample_rate == 8000

    def test_rejects_nonpositive_factor(self):
        w = Waveform(np.zeros(100), 8000)
        with pytest.raises(ValueError):
            speed_perturb(w, 0.0)

    @settings(max_examples=30, deadline=None)
    @given(
        n=st.integers(min_value=50, max_value=5000),
        factor=st.floats(min_value=0.95, max_value=1.05),
    )
    def test_output_length_formula(self, n, factor):
        w = Waveform(np.zeros(n), 8000)
        assert len(speed_perturb(w, factor)) == int(round(n / factor))
