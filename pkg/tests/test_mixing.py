"""Mixture simulation: exact additivity, SNR scaling, cropping, item contracts."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exformer.audio import DEFAULT_SAMPLE_RATE, Waveform
from exformer.corpus import synth_speaker_utterance
from exformer.mixing import MixSpec, TrainItem, dynamic_mix


def _sources(duration=2.0, seed=0):
    a = synth_speaker_utterance(0, duration, seed)
    b = synth_speaker_utterance(1, duration, seed + 1)
    enroll = synth_speaker_utterance(0, duration, seed + 2)
    return a, b, enroll


class TestDynamicMix:
    def test_mixture_is_exactly_additive(self):
        a, b, enroll = _sources()
        item = dynamic_mix(a, b, MixSpec(snr_db=3.0, segment_seconds=1.0, seed=4), enroll)
        residual_error = item.mixture.samples - item.target.samples - item.residual.samples
        assert np.all(residual_error == 0.0)

    def test_snr_is_achieved(self):
        a, b, enroll = _sources()
        item = dynamic_mix(a, b, MixSpec(snr_db=0.0, segment_seconds=1.0, seed=4), enroll)
        p_t = np.mean(item.target.samples**2)
        p_r = np.mean(item.residual.samples**2)
        assert 10 * np.log10(p_t / p_r) == pytest.approx(0.0, abs=1e-6)

    def test_segment_length(self):
        a, b, enroll = _sources()
        item = dynamic_mix(a, b, MixSpec(snr_db=2.0, segment_seconds=0.5, seed=0), enroll)
        n = int(0.5 * DEFAULT_SAMPLE_RATE)
        assert len(item.mixture) == len(item.target) == len(item.residual) == n

    def test_enrollment_passes_through(self):
        a, b, enroll = _sources()
        item = dynamic_mix(a, b, MixSpec(snr_db=2.0, segment_seconds=0.5, seed=0), enroll)
        assert np.array_equal(item.enrollment.samples, enroll.samples)

    def test_deterministic_in_seed(self):
        a, b, enroll = _sources()
        spec = MixSpec(snr_db=1.0, segment_seconds=0.5, seed=11)
        i1 = dynamic_mix(a, b, spec, enroll)
        i2 = dynamic_mix(a, b, spec, enroll)
        assert np.array_equal(i1.mixture.samples, i2.mixture.samples)

    def test_seed_moves_the_crop(self):
        a, b, enroll = _sources()
        i1 = dynamic_mix(a, b, MixSpec(snr_db=1.0, segment_seconds=0.5, seed=1), enroll)
        i2 = dynamic_mix(a, b, MixSpec(snr_db=1.0, segment_seconds=0.5, seed=2), enroll)
        assert not np.array_equal(i1.mixture.samples, i2.mixture.samples)

    def test_short_sources_padded(self):
        a = synth_speaker_utterance(0, 0.25, 0)
        b = synth_speaker_utterance(1, 0.25, 1)
        enroll = synth_speaker_utterance(0, 0.25, 2)
        item = dynamic_mix(a, b, MixSpec(snr_db=0.0, segment_seconds=0.5, seed=0), enroll)
        assert len(item.mixture) == int(0.5 * DEFAULT_SAMPLE_RATE)

    def test_sample_rate_mismatch_rejected(self):
        a, b, enroll = _sources()
        odd = Waveform(b.samples, 16000)
        with pytest.raises(ValueError):
            dynamic_mix(a, odd, MixSpec(snr_db=0.0, segment_seconds=0.5, seed=0), enroll)

    @settings(max_examples=25, deadline=None)
    @given(
        snr=st.floats(min_value=-10, max_value=10),
        seed=st.integers(min_value=0, max_value=10_000),
    )
    def test_additivity_property(self, snr, seed):
        a, b, enroll = _sources(duration=1.0)
        item = dynamic_mix(a, b, MixSpec(snr_db=snr, segment_seconds=0.5, seed=seed), enroll)
        assert np.all(item.mixture.samples - item.target.samples - item.residual.samples == 0.0)


class TestTrainItem:
    def _wave(self, n=100):
        return Waveform(np.random.default_rng(0).standard_normal(n), 8000)

    def test_labeled_requires_references(self):
        with pytest.raises(ValueError):
            TrainItem(mixture=self._wave(), enrollment=self._wave(), labeled=True)

    def test_unlabeled_forbids_references(self):
        with pytest.raises(ValueError):
            TrainItem(
                mixture=self._wave(),
                enrollment=self._wave(),
                target=self._wave(),
                residual=self._wave(),
                labeled=False,
            )

    def test_reference_length_must_match(self):
        with pytest.raises(ValueError):
            TrainItem(
                mixture=self._wave(100),
                enrollment=self._wave(100),
                target=self._wave(99),
                residual=self._wave(100),
                labeled=True,
            )

    def test_valid_unlabeled(self):
        item = TrainItem(mixture=self._wave(), enrollment=self._wave(), labeled=False)
        assert not item.labeled and item.target is None and item.residual is None


class TestMixSpec:
    def test_rejects_nonpositive_segment(self):
        with pytest.raises(ValueError):
            MixSpec(snr_db=0.0, segment_seconds=0.0)
