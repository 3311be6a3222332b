"""Input-space diffusion baseline: noise prediction on the full dense vector.

Same schedule and samplers as the latent model; the backbone sees the raw
ambient-dimensional vector and predicts the added noise, which the sampler
adapter converts to a clean-state estimate. No self-conditioning.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import torch

from ..diffusion.backbone import BackboneConfig, MlpUnet
from ..diffusion.losses import log_snr_tensor
from ..diffusion.sampling import eps_model_denoiser, sample
from ..diffusion.schedule import NoiseSchedule, forward_diffuse

__all__ = ["DenseDmConfig", "build_dense_backbone", "dense_ddpm_loss", "dense_sample"]


@dataclass(frozen=True)
class DenseDmConfig:
    ambient_dim: int
    hidden_widths: tuple[int, ...] = (256, 128)
    num_steps: int = 1000
    prediction: str = "eps"

    def __post_init__(self) -> None:
        if self.ambient_dim < 1:
            raise ValueError("ambient_dim must be positive")
        if not self.hidden_widths or any(w < 1 for w in self.hidden_widths):
            raise ValueError("hidden_widths must be positive")
        if self.prediction != "eps":
            raise ValueError(f"only eps-prediction is supported, got {self.prediction!r}")
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))

    def backbone_config(self) -> BackboneConfig:
        return BackboneConfig(
            data_dim=self.ambient_dim,
            hidden_widths=self.hidden_widths,
            self_conditioning=False,
        )


def build_dense_backbone(config: DenseDmConfig) -> MlpUnet:
    return MlpUnet(config.backbone_config())


def dense_ddpm_loss(
    model: MlpUnet,
    x0: torch.Tensor,
    schedule: NoiseSchedule,
    *,
    generator: Optional[torch.Generator] = None,
    t: Optional[torch.Tensor] = None,
    eps: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Noise-prediction objective: mean over the batch of ||eps - g(x_t, t)||^2."""
    batch = x0.shape[0]
    if t is None:
        t = torch.randint(1, schedule.num_steps + 1, (batch,), generator=generator,
                          device=x0.device)
    if eps is None:
        eps = torch.randn(x0.shape, generator=generator, dtype=x0.dtype, device=x0.device)
    x_t = forward_diffuse(x0, t, eps, schedule)
    lsnr = log_snr_tensor(schedule, t, x0.dtype, x0.device)
    pred = model(x_t, lsnr, None)
    return ((eps - pred) ** 2).sum(dim=-1).mean()


def dense_sample(
    model: MlpUnet,
    schedule: NoiseSchedule,
    n: int,
    *,
    kind: str = "ddim",
    generator: Optional[torch.Generator] = None,
    dtype: torch.dtype = torch.float32,
) -> torch.Tensor:
    """Draw n dense vectors through the shared reverse-process samplers."""
    denoise = eps_model_denoiser(model, schedule)
    return sample(
        denoise, schedule, n, model.config.data_dim,
        kind=kind, generator=generator, dtype=dtype,
    )
