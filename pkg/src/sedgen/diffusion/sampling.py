"""Ancestral (stochastic) and deterministic reverse-process samplers.

Both samplers step t = T..1 on a clean-state prediction x0_hat and share the
same schedule arrays. The deterministic variant re-derives the implied noise
eps_hat = (x_t - sqrt(g_t) x0_hat)/sqrt(1-g_t) and projects it to t-1; the
ancestral variant draws from the Gaussian posterior with matched mean and
variance, adding no noise on the final step. The previous clean-state
estimate is chained across steps as the self-conditioning input.
"""

from __future__ import annotations

import math
from typing import Callable, Protocol

import torch

from .backbone import MlpUnet
from .losses import log_snr_tensor
from .schedule import NoiseSchedule

__all__ = ["sample", "latent_denoiser", "eps_model_denoiser", "SAMPLER_KINDS"]

SAMPLER_KINDS = ("ddpm", "ddim")

DenoiseFn = Callable[[torch.Tensor, int, torch.Tensor], torch.Tensor]


def latent_denoiser(model: MlpUnet, schedule: NoiseSchedule) -> DenoiseFn:
    """Adapter for a clean-state-predicting backbone."""

    def denoise(z_t: torch.Tensor, t: int, z_tilde: torch.Tensor) -> torch.Tensor:
        ts = torch.full((z_t.shape[0],), t, dtype=torch.long, device=z_t.device)
        lsnr = log_snr_tensor(schedule, ts, z_t.dtype, z_t.device)
        return model(z_t, lsnr, z_tilde if model.config.self_conditioning else None)

    return denoise


def eps_model_denoiser(model: MlpUnet, schedule: NoiseSchedule) -> DenoiseFn:
    """Adapter for a noise-predicting backbone: converts eps_hat to x0_hat."""

    def denoise(x_t: torch.Tensor, t: int, _z_tilde: torch.Tensor) -> torch.Tensor:
        ts = torch.full((x_t.shape[0],), t, dtype=torch.long, device=x_t.device)
        lsnr = log_snr_tensor(schedule, ts, x_t.dtype, x_t.device)
        eps_hat = model(x_t, lsnr, None)
        g = float(schedule.gammas[t])
        return (x_t - math.sqrt(1.0 - g) * eps_hat) / math.sqrt(g)

    return denoise


@torch.no_grad()
def sample(denoise: DenoiseFn, schedule: NoiseSchedule, n: int, dim: int, *,
           kind: str = "ddim", generator: torch.Generator | None = None,
           dtype: torch.dtype = torch.float32, device: str | torch.device = "cpu",
           return_trajectory: bool = False):
    """Draw n clean states of width dim; deterministic for "ddim" given the seed."""
    if kind not in SAMPLER_KINDS:
        raise ValueError(f"unknown sampler kind {kind!r}; expected one of {SAMPLER_KINDS}")
    if n < 0:
        raise ValueError("n must be non-negative")
    g = schedule.gammas
    z = torch.randn((n, dim), generator=generator, dtype=dtype, device=device)
    z_tilde = torch.zeros_like(z)
    trajectory = [z.clone()] if return_trajectory else None

    for t in range(schedule.num_steps, 0, -1):
        x0_hat = denoise(z, t, z_tilde)
        g_t, g_prev = float(g[t]), float(g[t - 1])
        if kind == "ddim":
            eps_hat = (z - math.sqrt(g_t) * x0_hat) / math.sqrt(1.0 - g_t)
            z = math.sqrt(g_prev) * x0_hat + math.sqrt(1.0 - g_prev) * eps_hat
        else:
            alpha_t = g_t / g_prev
            mean = (
                math.sqrt(g_prev) * (1.0 - alpha_t) / (1.0 - g_t) * x0_hat
                + math.sqrt(alpha_t) * (1.0 - g_prev) / (1.0 - g_t) * z
            )
            if t > 1:
                var = (1.0 - alpha_t) * (1.0 - g_prev) / (1.0 - g_t)
                noise = torch.randn(z.shape, generator=generator, dtype=dtype, device=device)
                z = mean + math.sqrt(var) * noise
            else:
                z = mean
        z_tilde = x0_hat
        if return_trajectory:
            trajectory.append(z.clone())

    if return_trajectory:
        return z, trajectory
    return z
