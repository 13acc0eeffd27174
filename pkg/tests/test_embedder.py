"""Speaker embedder: normalization, pooling, GE2E loss behavior."""

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from exformer.audio import Waveform
from exformer.embedder import (
    POOLING_MODES,
    EmbedderConfig,
    GE2ELoss,
    SpeakerEmbedder,
    embed,
    ge2e_loss,
)

TINY = EmbedderConfig(n_blstm_layers=1, hidden_units=16, embed_dim=8)


def _embedder(cfg=TINY, seed=0):
    torch.manual_seed(seed)
    return SpeakerEmbedder(cfg)


class TestSpeakerEmbedder:
    def test_output_shape_and_norm(self):
        e = _embedder()
        z = e.embed_waveform(torch.randn(4000))
        assert z.shape == (8,)
        assert abs(z.norm().detach().item() - 1.0) < 1e-6

    def test_batched_matches_single(self):
        e = _embedder()
        x = torch.randn(3, 2000)
        batch = e.embed_waveform(x)
        singles = torch.stack([e.embed_waveform(x[i]) for i in range(3)])
        assert batch.shape == (3, 8)
        assert torch.allclose(batch, singles, atol=1e-6)

    def test_embed_returns_float64_numpy(self):
        e = _embedder()
        z = embed(Waveform(np.random.default_rng(0).standard_normal(2000), 8000), e)
        assert isinstance(z, np.ndarray) and z.dtype == np.float64
        assert abs(np.linalg.norm(z) - 1.0) < 1e-6

    def test_embed_is_deterministic(self):
        e = _embedder()
        w = Waveform(np.random.default_rng(1).standard_normal(3000), 8000)
        assert np.array_equal(embed(w, e), embed(w, e))

    def test_embed_restores_training_mode(self):
        e = _embedder()
        e.train()
        embed(Waveform(np.zeros(2000) + 0.1, 8000), e)
        assert e.training

    def test_pooling_modes_differ(self):
        torch.manual_seed(0)
        e1 = SpeakerEmbedder(EmbedderConfig(n_blstm_layers=1, hidden_units=16, embed_dim=8, pooling="edge_output"))
        torch.manual_seed(0)
        e2 = SpeakerEmbedder(EmbedderConfig(n_blstm_layers=1, hidden_units=16, embed_dim=8, pooling="final_state"))
        x = torch.randn(4000)
        assert not torch.allclose(e1.embed_waveform(x), e2.embed_waveform(x))

    def test_unknown_pooling_rejected(self):
        with pytest.raises(ValueError):
            EmbedderConfig(pooling="mean")

    def test_gradient_flows_to_input(self):
        e = _embedder()
        x = torch.randn(2000, requires_grad=True)
        e.embed_waveform(x).sum().backward()
        assert x.grad is not None and torch.isfinite(x.grad).all()

    def test_too_short_input_rejected(self):
        with pytest.raises(ValueError):
            _embedder().embed_waveform(torch.zeros(100))

    @settings(max_examples=15, deadline=None)
    @given(n=st.integers(min_value=200, max_value=6000))
    def test_unit_norm_property(self, n):
        e = _embedder()
        z = e.embed_waveform(torch.randn(n))
        assert abs(z.norm().detach().item() - 1.0) < 1e-6


def _unit_rows(n, m, d, seed):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, m, d))
    z /= np.linalg.norm(z, axis=-1, keepdims=True)
    return torch.tensor(z, dtype=torch.float64)


class TestGE2ELoss:
    def test_uniform_case(self):
        e = torch.zeros(2, 2, 4, dtype=torch.float64)
        e[..., 0] = 1.0
        assert float(ge2e_loss(e, w=1.0, b=0.0)) == pytest.approx(np.log(2.0), abs=1e-12)

    def test_separated_clusters(self):
        e = torch.zeros(2, 3, 4, dtype=torch.float64)
        e[0, :, 0] = 1.0
        e[1, :, 1] = 1.0
        expected = float(np.log1p(np.exp(-10.0)))
        assert float(ge2e_loss(e, w=10.0, b=0.0)) == pytest.approx(expected, abs=1e-9)

    def test_better_separation_lower_loss(self):
        mixed = _unit_rows(3, 4, 8, seed=0)
        separated = torch.zeros(3, 4, 8, dtype=torch.float64)
        for j in range(3):
            separated[j, :, j] = 1.0
        assert float(ge2e_loss(separated)) < float(ge2e_loss(mixed))

    def test_single_speaker_rejected(self):
        with pytest.raises(ValueError):
            ge2e_loss(_unit_rows(1, 4, 8, seed=0))

    def test_single_utterance_rejected(self):
        with pytest.raises(ValueError):
            ge2e_loss(_unit_rows(3, 1, 8, seed=0))

    def test_non_unit_rows_rejected(self):
        z = _unit_rows(2, 2, 4, seed=0) * 2.0
        with pytest.raises(ValueError):
            ge2e_loss(z)

    def test_2d_rejected(self):
        with pytest.raises(ValueError):
            ge2e_loss(torch.eye(4, dtype=torch.float64))

    def test_weight_clamp_keeps_w_positive(self):
        e = _unit_rows(2, 2, 8, seed=1)
        # A negative scale would invert the contrast; the clamp forbids it.
        value = ge2e_loss(e, w=-5.0, b=0.0)
        assert torch.isfinite(value)
        direct = ge2e_loss(e, w=1e-6, b=0.0)
        assert float(value) == pytest.approx(float(direct))

    def test_gradients_reach_embeddings(self):
        z = _unit_rows(2, 3, 8, seed=2).requires_grad_(True)
        ge2e_loss(z).backward()
        assert torch.isfinite(z.grad).all()

    def test_module_exposes_learnable_scalars(self):
        criterion = GE2ELoss()
        names = {name for name, _ in criterion.named_parameters()}
        assert len(names) == 2
        e = _unit_rows(2, 2, 8, seed=3)
        loss = criterion(e)
        loss.backward()
        assert all(p.grad is not None for p in criterion.parameters())
