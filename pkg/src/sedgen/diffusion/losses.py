"""Training objective for the latent denoiser: clean-state regression.

Timestep and noise are drawn per sample; with probability one half the
self-conditioning input is zeroed, otherwise it carries a first-pass estimate
computed without gradient flow. Per-sample error is the squared L2 norm of
(z0 - prediction), averaged over the batch.
"""

from __future__ import annotations

import torch

from .backbone import MlpUnet
from .schedule import NoiseSchedule, forward_diffuse

__all__ = ["diffusion_loss", "log_snr_tensor"]


def log_snr_tensor(schedule: NoiseSchedule, t: torch.Tensor,
                   dtype: torch.dtype, device=None) -> torch.Tensor:
    g = torch.as_tensor(schedule.gammas, dtype=dtype, device=device)[t]
    return torch.log(g / (1.0 - g))


def diffusion_loss(model: MlpUnet, z0: torch.Tensor, schedule: NoiseSchedule, *,
                   generator: torch.Generator | None = None,
                   t: torch.Tensor | None = None,
                   eps: torch.Tensor | None = None,
                   self_cond_zero: torch.Tensor | None = None) -> torch.Tensor:
    """Batch loss; pass explicit (t, eps, self_cond_zero) to pin the draws."""
    batch = z0.shape[0]
    if t is None:
        t = torch.randint(1, schedule.num_steps + 1, (batch,), generator=generator,
                          device=z0.device)
    if eps is None:
        eps = torch.randn(z0.shape, generator=generator, dtype=z0.dtype, device=z0.device)
    z_t = forward_diffuse(z0, t, eps, schedule)
    lsnr = log_snr_tensor(schedule, t, z0.dtype, z0.device)

    z_tilde = None
    if model.config.self_conditioning:
        if self_cond_zero is None:
            u = torch.rand(batch, generator=generator, device=z0.device)
            self_cond_zero = u < 0.5
        z_tilde = torch.zeros_like(z0)
        if bool((~self_cond_zero).any()):
            with torch.no_grad():
                first_pass = model(z_t, lsnr, torch.zeros_like(z0))
            z_tilde = torch.where(self_cond_zero[:, None], z_tilde, first_pass.detach())

    pred = model(z_t, lsnr, z_tilde)
    return ((z0 - pred) ** 2).sum(dim=-1).mean()
