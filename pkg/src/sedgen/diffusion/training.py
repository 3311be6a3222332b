"""Training loop shared by the latent denoiser and input-space baselines."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Protocol

import numpy as np
import torch

from .backbone import MlpUnet
from .ema import EmaState
from .losses import diffusion_loss
from .schedule import NoiseSchedule

__all__ = [
    "DiffusionTrainConfig",
    "LatentStats",
    "compute_latent_stats",
    "train_denoiser",
]


@dataclass(frozen=True)
class DiffusionTrainConfig:
    steps: int = 5000
    batch_size: int = 64
    learning_rate: float = 1e-4  # constant
    ema_decay: float = 0.9999
    seed: int = 0

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class LatentStats:
    """Per-coordinate standardization of the encoder's deterministic latents."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "std", np.asarray(self.std, dtype=np.float64))
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ValueError("mean/std must be 1-d arrays of equal length")
        if np.any(self.std <= 0):
            raise ValueError("std must be positive")

    def standardize(self, z: torch.Tensor) -> torch.Tensor:
        mean = torch.as_tensor(self.mean, dtype=z.dtype, device=z.device)
        std = torch.as_tensor(self.std, dtype=z.dtype, device=z.device)
        return (z - mean) / std

    def destandardize(self, z: torch.Tensor) -> torch.Tensor:
        mean = torch.as_tensor(self.mean, dtype=z.dtype, device=z.device)
        std = torch.as_tensor(self.std, dtype=z.dtype, device=z.device)
        return z * std + mean


def compute_latent_stats(latents: torch.Tensor | np.ndarray, *, floor: float = 1e-6) -> LatentStats:
    """Mean/std per coordinate, std floored to keep standardization invertible."""
    z = latents.detach().cpu().numpy() if isinstance(latents, torch.Tensor) else np.asarray(latents)
    if z.ndim != 2:
        raise ValueError(f"expected (n, latent_dim) array, got shape {z.shape}")
    mean = z.mean(axis=0)
    std = np.maximum(z.std(axis=0), floor)
    return LatentStats(mean=mean, std=std)


class _LossFn(Protocol):
    def __call__(
        self,
        model: MlpUnet,
        batch: torch.Tensor,
        schedule: NoiseSchedule,
        *,
        generator: Optional[torch.Generator],
    ) -> torch.Tensor: ...


def train_denoiser(
    model: MlpUnet,
    data: torch.Tensor,
    schedule: NoiseSchedule,
    config: DiffusionTrainConfig,
    *,
    loss_fn: _LossFn = diffusion_loss,
    log_every: int = 0,
    log_fn: Optional[Callable[[int, float], None]] = None,
) -> tuple[EmaState, list[dict[str, float]]]:
    """Optimise a denoising backbone on (n, dim) training states.

    ``loss_fn`` defaults to clean-state regression; input-space baselines
    pass their noise-prediction objective instead.
    """
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError(f"expected non-empty (n, dim) training data, got {tuple(data.shape)}")
    generator = torch.Generator().manual_seed(config.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    ema = EmaState.from_module(model, decay=config.ema_decay)
    history: list[dict[str, float]] = []

    n = data.shape[0]
    order = torch.randperm(n, generator=generator)
    cursor = 0
    model.train()
    for step in range(config.steps):
        if cursor + config.batch_size > n:
            order = torch.randperm(n, generator=generator)
            cursor = 0
        batch = data[order[cursor : cursor + config.batch_size]]
        cursor += config.batch_size

        loss = loss_fn(model, batch, schedule, generator=generator)
        optimizer.zero_grad(set_to_none=True)
        loss.backward()
        optimizer.step()
        ema.update(model)

        value = float(loss.detach())
        history.append({"step": float(step), "lr": config.learning_rate, "loss": value})
        if log_fn is not None and log_every and (step % log_every == 0 or step == config.steps - 1):
            log_fn(step, value)
    model.eval()
    return ema, history
