import math

import numpy as np
import pytest
import torch

from sedgen.diffusion import (
    BackboneConfig,
    MlpUnet,
    NoiseSchedule,
    SAMPLER_KINDS,
    eps_model_denoiser,
    latent_denoiser,
    sample,
)


def _constant_denoiser(value):
    def denoise(z_t, t, z_tilde):
        return torch.full_like(z_t, value)

    return denoise


def _zero_denoiser(z_t, t, z_tilde):
    return torch.zeros_like(z_t)


def _tiny_schedule():
    # T = 1 with gamma(0) essentially 1: both samplers should land on the
    # model's clean-state prediction almost exactly.
    return NoiseSchedule(np.array([1.0 - 1e-12, 1e-5]))


class TestSingleStepClosedForms:
    @pytest.mark.parametrize("kind", SAMPLER_KINDS)
    def test_constant_prediction_recovered(self, kind):
        sched = _tiny_schedule()
        out = sample(_constant_denoiser(3.0), sched, 5, 2, kind=kind,
                     generator=torch.Generator().manual_seed(0), dtype=torch.float64)
        assert out.shape == (5, 2)
        np.testing.assert_allclose(out.numpy(), 3.0, atol=1e-5)

    def test_ddpm_final_step_noiseless(self):
        # At t=1 the ancestral sampler uses the posterior mean only, so two
        # runs that share z_T agree exactly regardless of the generator state.
        sched = _tiny_schedule()
        gen_a = torch.Generator().manual_seed(123)
        gen_b = torch.Generator().manual_seed(123)
        out_a = sample(_constant_denoiser(1.5), sched, 4, 3, kind="ddpm",
                       generator=gen_a, dtype=torch.float64)
        out_b = sample(_constant_denoiser(1.5), sched, 4, 3, kind="ddpm",
                       generator=gen_b, dtype=torch.float64)
        assert out_a.numpy().tobytes() == out_b.numpy().tobytes()

    def test_ddim_single_step_formula(self):
        # One DDIM step from z_T with prediction c:
        # eps_hat = (z - sqrt(g1) c)/sqrt(1-g1); z0 = sqrt(g0) c + sqrt(1-g0) eps_hat
        sched = _tiny_schedule()
        gen = torch.Generator().manual_seed(7)
        out = sample(_constant_denoiser(2.0), sched, 3, 2, kind="ddim",
                     generator=gen, dtype=torch.float64)
        z_T = torch.randn((3, 2), generator=torch.Generator().manual_seed(7),
                          dtype=torch.float64)
        g0, g1 = sched.gamma(0), sched.gamma(1)
        eps_hat = (z_T - math.sqrt(g1) * 2.0) / math.sqrt(1 - g1)
        expected = math.sqrt(g0) * 2.0 + math.sqrt(1 - g0) * eps_hat
        np.testing.assert_allclose(out.numpy(), expected.numpy(), rtol=1e-12)


class TestDdimProperties:
    def test_deterministic_given_seed(self):
        sched = NoiseSchedule.cosine(50)
        outs = []
        for _ in range(2):
            gen = torch.Generator().manual_seed(99)
            outs.append(sample(_zero_denoiser, sched, 6, 4, kind="ddim",
                               generator=gen, dtype=torch.float64))
        assert outs[0].numpy().tobytes() == outs[1].numpy().tobytes()

    def test_zero_prediction_shrinks_norms_exactly(self):
        # With x0_hat = 0, one DDIM step multiplies z by
        # sqrt(1 - g_{t-1}) / sqrt(1 - g_t); check every step via trajectory.
        sched = NoiseSchedule.cosine(20)
        gen = torch.Generator().manual_seed(3)
        _, traj = sample(_zero_denoiser, sched, 4, 5, kind="ddim", generator=gen,
                         dtype=torch.float64, return_trajectory=True)
        assert len(traj) == 21  # z_T plus one state per step
        g = sched.gammas
        for i in range(20):
            t = 20 - i
            ratio = math.sqrt(1 - g[t - 1]) / math.sqrt(1 - g[t])
            np.testing.assert_allclose(traj[i + 1].numpy(), traj[i].numpy() * ratio,
                                       rtol=1e-12)

    def test_perfect_model_recovers_target(self):
        # A denoiser that always outputs the target z0 drives DDIM to within
        # sqrt(1 - gamma(0)) of it; with gamma(0) ~ 1 - 1e-12 the residual
        # noise term is ~1e-6 of ||eps_hat||.
        g = np.concatenate([[1.0 - 1e-12], np.linspace(0.8, 1e-5, 10)])
        sched = NoiseSchedule(g)
        target = torch.tensor([[1.0, -2.0, 0.5]], dtype=torch.float64)

        def perfect(z_t, t, z_tilde):
            return target.expand_as(z_t)

        out = sample(perfect, sched, 8, 3, kind="ddim",
                     generator=torch.Generator().manual_seed(11), dtype=torch.float64)
        err = (out - target).norm(dim=-1).max().item()
        assert err < 1e-5

    def test_self_conditioning_chained(self):
        # z_tilde passed at step t equals the prediction from step t+1.
        sched = NoiseSchedule.cosine(5)
        seen = []

        def tracking(z_t, t, z_tilde):
            seen.append((t, z_tilde.clone()))
            return torch.full_like(z_t, float(t))

        sample(tracking, sched, 2, 3, kind="ddim",
               generator=torch.Generator().manual_seed(0), dtype=torch.float64)
        ts = [t for t, _ in seen]
        assert ts == [5, 4, 3, 2, 1]
        assert torch.all(seen[0][1] == 0.0)  # first call gets zeros
        for i in range(1, len(seen)):
            prev_t = seen[i - 1][0]
            assert torch.all(seen[i][1] == float(prev_t))


class TestDdpmProperties:
    def test_deterministic_given_seed(self):
        sched = NoiseSchedule.cosine(30)
        outs = []
        for _ in range(2):
            gen = torch.Generator().manual_seed(5)
            outs.append(sample(_zero_denoiser, sched, 4, 3, kind="ddpm",
                               generator=gen, dtype=torch.float64))
        assert outs[0].numpy().tobytes() == outs[1].numpy().tobytes()

    def test_differs_from_ddim(self):
        sched = NoiseSchedule.cosine(30)
        ddim = sample(_zero_denoiser, sched, 4, 3, kind="ddim",
                      generator=torch.Generator().manual_seed(5), dtype=torch.float64)
        ddpm = sample(_zero_denoiser, sched, 4, 3, kind="ddpm",
                      generator=torch.Generator().manual_seed(5), dtype=torch.float64)
        assert not torch.allclose(ddim, ddpm)

    def test_posterior_step_formula(self):
        # Single intermediate DDPM step against the hand-computed posterior.
        g = np.array([1.0 - 1e-9, 0.7, 0.3, 1e-4])
        sched = NoiseSchedule(g)
        gen = torch.Generator().manual_seed(21)
        _, traj = sample(_constant_denoiser(1.0), sched, 1, 2, kind="ddpm",
                         generator=gen, dtype=torch.float64, return_trajectory=True)
        # Recompute the t=3 -> t=2 step: mean + sqrt(var) * first posterior draw.
        gen2 = torch.Generator().manual_seed(21)
        z3 = torch.randn((1, 2), generator=gen2, dtype=torch.float64)
        g3, g2 = g[3], g[2]
        alpha = g3 / g2
        mean = (math.sqrt(g2) * (1 - alpha) / (1 - g3) * torch.ones_like(z3)
                + math.sqrt(alpha) * (1 - g2) / (1 - g3) * z3)
        var = (1 - alpha) * (1 - g2) / (1 - g3)
        noise = torch.randn((1, 2), generator=gen2, dtype=torch.float64)
        expected = mean + math.sqrt(var) * noise
        np.testing.assert_allclose(traj[1].numpy(), expected.numpy(), rtol=1e-12)


class TestAdaptersAndValidation:
    def test_eps_adapter_formula(self):
        sched = NoiseSchedule.cosine(10)
        cfg = BackboneConfig(data_dim=3, self_conditioning=False)
        model = MlpUnet(cfg).double()
        with torch.no_grad():
            model.out_proj.bias.copy_(torch.tensor([0.1, -0.2, 0.3]))
        denoise = eps_model_denoiser(model, sched)
        x_t = torch.randn(4, 3, generator=torch.Generator().manual_seed(0),
                          dtype=torch.float64)
        out = denoise(x_t, 5, torch.zeros_like(x_t))
        g = sched.gamma(5)
        eps_hat = torch.tensor([0.1, -0.2, 0.3], dtype=torch.float64)
        expected = (x_t - math.sqrt(1 - g) * eps_hat) / math.sqrt(g)
        torch.testing.assert_close(out, expected)

    def test_latent_adapter_passes_self_conditioning(self):
        sched = NoiseSchedule.cosine(10)
        calls = {}

        class Spy(MlpUnet):
            def forward(self, z_t, log_snr, z_tilde=None):
                calls["z_tilde"] = z_tilde
                return super().forward(z_t, log_snr, z_tilde)

        model = Spy(BackboneConfig(data_dim=2, self_conditioning=True))
        denoise = latent_denoiser(model, sched)
        marker = torch.ones(3, 2)
        denoise(torch.zeros(3, 2), 4, marker)
        assert calls["z_tilde"] is marker

        model_no_sc = Spy(BackboneConfig(data_dim=2, self_conditioning=False))
        denoise = latent_denoiser(model_no_sc, sched)
        denoise(torch.zeros(3, 2), 4, marker)
        assert calls["z_tilde"] is None

    def test_unknown_kind_rejected(self):
        sched = NoiseSchedule.cosine(10)
        with pytest.raises(ValueError, match="ddpm"):
            sample(_zero_denoiser, sched, 1, 2, kind="euler")

    def test_negative_n_rejected(self):
        sched = NoiseSchedule.cosine(10)
        with pytest.raises(ValueError, match="non-negative"):
            sample(_zero_denoiser, sched, -1, 2)

    def test_zero_samples(self):
        sched = NoiseSchedule.cosine(10)
        out = sample(_zero_denoiser, sched, 0, 4)
        assert out.shape == (0, 4)

    def test_sampler_kinds(self):
        assert SAMPLER_KINDS == ("ddpm", "ddim")
