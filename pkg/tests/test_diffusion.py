import numpy as np
import pytest
import torch
from torch import nn

from sedgen.diffusion import (
    BackboneConfig,
    DiffusionTrainConfig,
    EmaState,
    LatentStats,
    MlpUnet,
    NoiseSchedule,
    compute_latent_stats,
    diffusion_loss,
    forward_diffuse,
    log_snr_tensor,
    train_denoiser,
)

from oracles import finite_difference_grads, pick_coords, relative_error


class _RiggedDenoiser(nn.Module):
    """Backbone stand-in whose prediction is a fixed function of its inputs."""

    def __init__(self, data_dim, fn, self_conditioning=False):
        super().__init__()
        self.config = BackboneConfig(data_dim=data_dim, self_conditioning=self_conditioning)
        self._fn = fn

    def forward(self, z_t, log_snr, z_tilde=None):
        return self._fn(z_t, log_snr, z_tilde)


class TestDiffusionLoss:
    def test_perfect_model_zero_loss(self):
        # A model that always returns the true z0 scores exactly zero.
        sched = NoiseSchedule.cosine(100)
        z0 = torch.randn(8, 4, generator=torch.Generator().manual_seed(0), dtype=torch.float64)
        model = _RiggedDenoiser(4, lambda z_t, lsnr, z_tilde: z0)
        loss = diffusion_loss(model, z0, sched, generator=torch.Generator().manual_seed(1))
        assert float(loss) == 0.0

    def test_zero_model_loss_is_mean_squared_norm(self):
        # Predicting zeros gives exactly mean_i ||z0_i||^2, independent of t/eps.
        sched = NoiseSchedule.cosine(100)
        z0 = torch.randn(16, 5, generator=torch.Generator().manual_seed(2), dtype=torch.float64)
        model = _RiggedDenoiser(5, lambda z_t, lsnr, z_tilde: torch.zeros_like(z_t))
        loss = diffusion_loss(model, z0, sched, generator=torch.Generator().manual_seed(3))
        expected = z0.pow(2).sum(dim=-1).mean()
        assert float(loss) == pytest.approx(float(expected), rel=1e-12)

    def test_pinned_draws_closed_form(self):
        # With t, eps pinned, loss = mean ||z0 - f(sqrt(g) z0 + sqrt(1-g) eps)||^2.
        sched = NoiseSchedule.cosine(10)
        z0 = torch.randn(4, 3, generator=torch.Generator().manual_seed(4), dtype=torch.float64)
        eps = torch.randn(4, 3, generator=torch.Generator().manual_seed(5), dtype=torch.float64)
        t = torch.tensor([2, 5, 7, 9])
        model = _RiggedDenoiser(3, lambda z_t, lsnr, z_tilde: 0.5 * z_t)
        loss = diffusion_loss(model, z0, sched, t=t, eps=eps)
        z_t = forward_diffuse(z0, t, eps, sched)
        expected = (z0 - 0.5 * z_t).pow(2).sum(dim=-1).mean()
        assert float(loss) == pytest.approx(float(expected), rel=1e-12)

    def test_log_snr_passed_matches_schedule(self):
        sched = NoiseSchedule.cosine(10)
        seen = {}

        def spy(z_t, lsnr, z_tilde):
            seen["lsnr"] = lsnr.clone()
            return torch.zeros_like(z_t)

        t = torch.tensor([1, 5, 10])
        z0 = torch.zeros(3, 2, dtype=torch.float64)
        diffusion_loss(_RiggedDenoiser(2, spy), z0, sched, t=t, eps=torch.zeros(3, 2, dtype=torch.float64))
        np.testing.assert_allclose(
            seen["lsnr"].numpy(), sched.log_snr(np.array([1, 5, 10])), rtol=1e-12
        )

    def test_self_cond_branches_differ_then_pin(self):
        # With self-conditioning, the zeroed branch and the first-pass branch
        # are genuinely different paths through the model.
        torch.manual_seed(0)
        cfg = BackboneConfig(data_dim=4, hidden_widths=(16, 8), self_conditioning=True)
        model = MlpUnet(cfg).double()
        with torch.no_grad():
            for p in model.parameters():
                p.add_(torch.randn(p.shape, dtype=p.dtype) * 0.3)
        sched = NoiseSchedule.cosine(50)
        z0 = torch.randn(6, 4, dtype=torch.float64)
        t = torch.randint(1, 51, (6,))
        eps = torch.randn(6, 4, dtype=torch.float64)
        loss_zeroed = diffusion_loss(model, z0, sched, t=t, eps=eps,
                                     self_cond_zero=torch.ones(6, dtype=torch.bool))
        loss_first_pass = diffusion_loss(model, z0, sched, t=t, eps=eps,
                                         self_cond_zero=torch.zeros(6, dtype=torch.bool))
        assert float(loss_zeroed.detach()) != pytest.approx(
            float(loss_first_pass.detach()), rel=1e-6
        )

    def test_zeroed_branch_equals_explicit_two_arg_call(self):
        cfg = BackboneConfig(data_dim=3, hidden_widths=(8,), self_conditioning=True)
        torch.manual_seed(1)
        model = MlpUnet(cfg).double()
        with torch.no_grad():
            for p in model.parameters():
                p.add_(torch.randn(p.shape, dtype=p.dtype) * 0.3)
        sched = NoiseSchedule.cosine(20)
        z0 = torch.randn(4, 3, dtype=torch.float64)
        t = torch.tensor([3, 8, 12, 20])
        eps = torch.randn(4, 3, dtype=torch.float64)
        loss = diffusion_loss(model, z0, sched, t=t, eps=eps,
                              self_cond_zero=torch.ones(4, dtype=torch.bool))
        z_t = forward_diffuse(z0, t, eps, sched)
        lsnr = log_snr_tensor(sched, t, torch.float64)
        pred = model(z_t, lsnr, torch.zeros_like(z0))
        expected = (z0 - pred).pow(2).sum(dim=-1).mean()
        assert float(loss) == pytest.approx(float(expected), rel=1e-12)

    def test_first_pass_carries_no_gradient(self):
        # Gradients through the self-conditioned loss must equal gradients of
        # the loss where the first pass is explicitly detached.
        cfg = BackboneConfig(data_dim=3, hidden_widths=(8, 4), self_conditioning=True)
        torch.manual_seed(2)
        model = MlpUnet(cfg).double()
        with torch.no_grad():
            for p in model.parameters():
                p.add_(torch.randn(p.shape, dtype=p.dtype) * 0.3)
        sched = NoiseSchedule.cosine(20)
        z0 = torch.randn(5, 3, dtype=torch.float64)
        t = torch.tensor([2, 5, 9, 14, 20])
        eps = torch.randn(5, 3, dtype=torch.float64)
        cond = torch.zeros(5, dtype=torch.bool)  # always use the first pass

        loss = diffusion_loss(model, z0, sched, t=t, eps=eps, self_cond_zero=cond)
        grads = torch.autograd.grad(loss, list(model.parameters()))

        z_t = forward_diffuse(z0, t, eps, sched)
        lsnr = log_snr_tensor(sched, t, torch.float64)
        with torch.no_grad():
            first = model(z_t, lsnr, torch.zeros_like(z0))
        pred = model(z_t, lsnr, first.detach())
        manual = (z0 - pred).pow(2).sum(dim=-1).mean()
        manual_grads = torch.autograd.grad(manual, list(model.parameters()))
        for g, m in zip(grads, manual_grads):
            torch.testing.assert_close(g, m)

    def test_gradients_match_finite_differences(self):
        # Central finite differences over a spread of coordinates; the
        # self-conditioning input is pinned to the zeroed branch so the loss
        # is a smooth function of the parameters.
        cfg = BackboneConfig(data_dim=3, hidden_widths=(8, 4), time_embed_dim=8,
                             time_hidden_dim=8, self_conditioning=True)
        torch.manual_seed(3)
        model = MlpUnet(cfg).double()
        with torch.no_grad():
            for p in model.parameters():
                p.add_(torch.randn(p.shape, dtype=p.dtype) * 0.3)
        sched = NoiseSchedule.cosine(20)
        z0 = torch.randn(4, 3, dtype=torch.float64)
        t = torch.tensor([3, 7, 12, 18])
        eps = torch.randn(4, 3, dtype=torch.float64)
        cond = torch.ones(4, dtype=torch.bool)

        def loss_fn():
            return diffusion_loss(model, z0, sched, t=t, eps=eps, self_cond_zero=cond)

        loss = loss_fn()
        grads = dict(zip([n for n, _ in model.named_parameters()],
                         torch.autograd.grad(loss, list(model.parameters()))))
        coords = pick_coords(model, 25, seed=0)
        fd = finite_difference_grads(loss_fn, model, coords)
        for (name, idx), fd_val in zip(coords, fd):
            auto = grads[name].reshape(-1)[idx].item()
            assert relative_error(auto, fd_val) < 1e-3, (name, idx, auto, fd_val)

    def test_loss_chi_square_statistics(self, rng):
        # For the zero model, MC over (t, eps) still returns exactly
        # mean ||z0||^2; sanity-check expectation against a chi-square draw.
        d = 6
        n = 20000
        z0 = torch.tensor(rng.standard_normal((n, d)))
        model = _RiggedDenoiser(d, lambda z_t, lsnr, z_tilde: torch.zeros_like(z_t))
        sched = NoiseSchedule.cosine(100)
        loss = diffusion_loss(model, z0, sched, generator=torch.Generator().manual_seed(0))
        # mean of chi^2_6 is 6 with std sqrt(2*6/n)
        assert float(loss) == pytest.approx(d, abs=3.5 * np.sqrt(2 * d / n))


class TestEma:
    def test_update_arithmetic(self):
        model = nn.Linear(1, 1, bias=False).double()
        with torch.no_grad():
            model.weight.fill_(1.0)
        ema = EmaState.from_module(model, decay=0.9)
        with torch.no_grad():
            model.weight.fill_(2.0)
        ema.update(model)
        # 0.9 * 1 + 0.1 * 2 = 1.1
        assert ema.shadow["weight"].item() == pytest.approx(1.1, rel=1e-12)

    def test_convexity_envelope(self):
        # The shadow always lies between the running min and max of the
        # parameter trajectory (EMA is a convex combination).
        model = nn.Linear(1, 1, bias=False)
        gen = torch.Generator().manual_seed(0)
        values = [float(model.weight.detach())]
        ema = EmaState.from_module(model, decay=0.95)
        for _ in range(50):
            with torch.no_grad():
                model.weight.copy_(torch.randn(1, 1, generator=gen))
            values.append(float(model.weight.detach()))
            ema.update(model)
            s = ema.shadow["weight"].item()
            assert min(values) - 1e-12 <= s <= max(values) + 1e-12

    def test_decay_one_is_frozen(self):
        model = nn.Linear(2, 2)
        init = {k: v.clone() for k, v in model.named_parameters()}
        ema = EmaState.from_module(model, decay=1.0)
        with torch.no_grad():
            for p in model.parameters():
                p.add_(1.0)
        ema.update(model)
        for k, v in init.items():
            torch.testing.assert_close(ema.shadow[k], v)

    def test_decay_zero_tracks_exactly(self):
        model = nn.Linear(2, 2)
        ema = EmaState.from_module(model, decay=0.0)
        with torch.no_grad():
            for p in model.parameters():
                p.mul_(3.0).add_(0.5)
        ema.update(model)
        for name, p in model.named_parameters():
            torch.testing.assert_close(ema.shadow[name], p.detach())

    def test_bad_decay_rejected(self):
        with pytest.raises(ValueError, match="decay"):
            EmaState({}, decay=1.5)
        with pytest.raises(ValueError, match="decay"):
            EmaState({}, decay=-0.1)

    def test_copy_to(self):
        model = nn.Linear(2, 3)
        ema = EmaState.from_module(model, decay=0.9)
        for s in ema.shadow.values():
            s.fill_(7.0)
        ema.copy_to(model)
        for p in model.parameters():
            assert torch.all(p == 7.0)

    def test_swapped_restores_weights(self):
        model = nn.Linear(2, 2)
        before = {k: v.clone() for k, v in model.named_parameters()}
        ema = EmaState.from_module(model, decay=0.9)
        for s in ema.shadow.values():
            s.fill_(-1.0)
        with ema.swapped(model):
            for p in model.parameters():
                assert torch.all(p == -1.0)
        for k, v in before.items():
            torch.testing.assert_close(dict(model.named_parameters())[k], v)

    def test_swapped_restores_on_exception(self):
        model = nn.Linear(2, 2)
        before = {k: v.clone() for k, v in model.named_parameters()}
        ema = EmaState.from_module(model, decay=0.9)
        for s in ema.shadow.values():
            s.fill_(5.0)
        with pytest.raises(RuntimeError, match="boom"):
            with ema.swapped(model):
                raise RuntimeError("boom")
        for k, v in before.items():
            torch.testing.assert_close(dict(model.named_parameters())[k], v)

    def test_unknown_parameter_rejected(self):
        model = nn.Linear(1, 1)
        ema = EmaState.from_module(model, decay=0.9)
        bigger = nn.Linear(2, 2)
        with pytest.raises(ValueError):
            ema.update(bigger)


class TestLatentStats:
    def test_standardize_roundtrip(self, rng):
        z = torch.tensor(rng.normal(3.0, 2.5, size=(100, 4)))
        stats = compute_latent_stats(z)
        std = stats.standardize(z)
        assert std.mean(dim=0).abs().max().item() < 1e-10
        assert (std.std(dim=0, unbiased=False) - 1).abs().max().item() < 1e-10
        back = stats.destandardize(std)
        torch.testing.assert_close(back, z)

    def test_std_floor(self):
        z = np.zeros((10, 3))
        stats = compute_latent_stats(z, floor=1e-6)
        assert np.all(stats.std == 1e-6)

    def test_bad_shapes(self):
        with pytest.raises(ValueError):
            compute_latent_stats(np.zeros(5))
        with pytest.raises(ValueError, match="1-d"):
            LatentStats(mean=np.zeros((2, 2)), std=np.ones((2, 2)))
        with pytest.raises(ValueError, match="positive"):
            LatentStats(mean=np.zeros(2), std=np.array([1.0, 0.0]))


class TestTrainDenoiser:
    def _setup(self, seed=0):
        cfg = BackboneConfig(data_dim=4, hidden_widths=(16, 8), time_embed_dim=8,
                             time_hidden_dim=8)
        torch.manual_seed(seed)
        model = MlpUnet(cfg)
        data = torch.randn(64, 4, generator=torch.Generator().manual_seed(42))
        sched = NoiseSchedule.cosine(20)
        return model, data, sched

    def test_loss_decreases(self):
        model, data, sched = self._setup()
        config = DiffusionTrainConfig(steps=200, batch_size=32, learning_rate=1e-3,
                                      ema_decay=0.99, seed=0)
        _, history = train_denoiser(model, data, sched, config)
        first = np.mean([h["loss"] for h in history[:20]])
        last = np.mean([h["loss"] for h in history[-20:]])
        assert last < first

    def test_deterministic_given_seed(self):
        config = DiffusionTrainConfig(steps=30, batch_size=16, learning_rate=1e-3,
                                      ema_decay=0.99, seed=7)
        states = []
        for _ in range(2):
            model, data, sched = self._setup(seed=5)
            ema, history = train_denoiser(model, data, sched, config)
            states.append((
                {k: v.detach().numpy().tobytes() for k, v in model.state_dict().items()},
                {k: v.numpy().tobytes() for k, v in ema.shadow.items()},
                [h["loss"] for h in history],
            ))
        assert states[0] == states[1]

    def test_history_schema(self):
        model, data, sched = self._setup()
        config = DiffusionTrainConfig(steps=5, batch_size=8, learning_rate=1e-3, seed=0)
        _, history = train_denoiser(model, data, sched, config)
        assert len(history) == 5
        assert set(history[0]) == {"step", "lr", "loss"}
        assert [h["step"] for h in history] == [0.0, 1.0, 2.0, 3.0, 4.0]

    def test_ema_matches_manual_replay(self, monkeypatch):
        # The returned shadow is exactly the decay-weighted recursion over the
        # post-step parameter snapshots, seeded with the pre-training weights.
        model, data, sched = self._setup(seed=1)
        init = {k: p.detach().clone() for k, p in model.named_parameters()}
        config = DiffusionTrainConfig(steps=10, batch_size=8, learning_rate=1e-3,
                                      ema_decay=0.9, seed=3)
        snapshots = []
        orig_update = EmaState.update

        def recording_update(self, module):
            snapshots.append({k: p.detach().clone() for k, p in module.named_parameters()})
            return orig_update(self, module)

        monkeypatch.setattr(EmaState, "update", recording_update)
        ema, _ = train_denoiser(model, data, sched, config)

        assert len(snapshots) == 10
        replay = {k: v.clone() for k, v in init.items()}
        for snap in snapshots:
            for name in replay:
                replay[name].mul_(0.9).add_(snap[name], alpha=0.1)
        for name in replay:
            assert replay[name].numpy().tobytes() == ema.shadow[name].numpy().tobytes()

    def test_empty_data_rejected(self):
        model, _, sched = self._setup()
        with pytest.raises(ValueError, match="non-empty"):
            train_denoiser(model, torch.zeros(0, 4), sched, DiffusionTrainConfig(steps=1))

    def test_bad_config(self):
        with pytest.raises(ValueError):
            DiffusionTrainConfig(steps=0)
        with pytest.raises(ValueError):
            DiffusionTrainConfig(batch_size=0)
        with pytest.raises(ValueError):
            DiffusionTrainConfig(learning_rate=0.0)
