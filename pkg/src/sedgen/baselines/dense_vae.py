"""Dense MLP variational autoencoder over the full input vector.

Encoder and decoder are mirrored ReLU MLPs; the posterior is a diagonal
Gaussian and the objective is squared-error reconstruction plus a
beta-weighted KL. Together with the latent denoiser this forms the
non-sparsity-aware latent-diffusion baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import torch
from torch import Tensor, nn

from ..savae.losses import kl_gaussian
from ..savae.model import PosteriorParams
from ..savae.training import SavaeTrainConfig, learning_rate_at
from ..diffusion.ema import EmaState

__all__ = [
    "DenseVaeConfig",
    "DenseVae",
    "DenseVaeLoss",
    "dense_vae_loss",
    "train_dense_vae",
]


@dataclass(frozen=True)
class DenseVaeConfig:
    ambient_dim: int
    hidden_widths: tuple[int, ...] = (256, 128)
    latent_dim: int = 16
    beta: float = 1e-6
    value_variance: float = 1.0

    def __post_init__(self) -> None:
        if self.ambient_dim < 1:
            raise ValueError("ambient_dim must be positive")
        if not self.hidden_widths or any(w < 1 for w in self.hidden_widths):
            raise ValueError("hidden_widths must be positive")
        if not 1 <= self.latent_dim < self.ambient_dim:
            raise ValueError("latent_dim must be in [1, ambient_dim)")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.value_variance <= 0:
            raise ValueError("value_variance must be positive")
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))


def _mlp(widths: Sequence[int]) -> nn.Sequential:
    layers: list[nn.Module] = []
    for i in range(len(widths) - 1):
        layers.append(nn.Linear(widths[i], widths[i + 1]))
        if i < len(widths) - 2:
            layers.append(nn.ReLU())
    return nn.Sequential(*layers)


class DenseVae(nn.Module):
    def __init__(self, config: DenseVaeConfig) -> None:
        super().__init__()
        self.config = config
        trunk = [config.ambient_dim, *config.hidden_widths]
        self.encoder = _mlp(trunk)
        last = config.hidden_widths[-1]
        self.act = nn.ReLU()
        self.mu_head = nn.Linear(last, config.latent_dim)
        self.log_var_head = nn.Linear(last, config.latent_dim)
        self.decoder = _mlp([config.latent_dim, *reversed(config.hidden_widths), config.ambient_dim])

    def encode(
        self,
        x: Tensor,
        *,
        deterministic: bool = False,
        generator: Optional[torch.Generator] = None,
        eps: Optional[Tensor] = None,
    ) -> tuple[PosteriorParams, Tensor]:
        h = self.act(self.encoder(x))
        mu = self.mu_head(h)
        log_var = self.log_var_head(h)
        posterior = PosteriorParams(mu=mu, log_var=log_var)
        if deterministic:
            return posterior, mu
        if eps is None:
            eps = torch.empty_like(mu).normal_(generator=generator)
        z = mu + torch.exp(0.5 * log_var) * eps
        return posterior, z

    def decode(self, z: Tensor) -> Tensor:
        return self.decoder(z)

    def roundtrip(
        self,
        x: Tensor,
        *,
        deterministic: bool = False,
        generator: Optional[torch.Generator] = None,
    ) -> tuple[Tensor, PosteriorParams, Tensor]:
        posterior, z = self.encode(x, deterministic=deterministic, generator=generator)
        return self.decode(z), posterior, z


@dataclass(frozen=True)
class DenseVaeLoss:
    recon_mse: Tensor
    kl: Tensor
    total: Tensor

    def detached(self) -> dict[str, float]:
        return {
            "recon_mse": float(self.recon_mse.detach()),
            "kl": float(self.kl.detach()),
            "total": float(self.total.detach()),
        }


def dense_vae_loss(
    x: Tensor, x_hat: Tensor, posterior: PosteriorParams, config: DenseVaeConfig
) -> DenseVaeLoss:
    """Per-sample sum of squared error over dimensions plus beta-weighted KL, batch mean."""
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {tuple(x.shape)} vs {tuple(x_hat.shape)}")
    recon = ((x - x_hat) ** 2).sum(dim=-1).mean() / config.value_variance
    kl = kl_gaussian(posterior.mu, posterior.log_var).mean()
    total = recon + config.beta * kl
    return DenseVaeLoss(recon_mse=recon, kl=kl, total=total)


def train_dense_vae(
    model: DenseVae,
    data: Tensor,
    config: SavaeTrainConfig,
) -> tuple[EmaState, list[dict[str, float]]]:
    """Optimise in place with the same schedule as the sparse autoencoder."""
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError(f"expected non-empty (n, dim) data, got {tuple(data.shape)}")
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

        lr = learning_rate_at(step, config)
        for group in optimizer.param_groups:
            group["lr"] = lr

        x_hat, posterior, _ = model.roundtrip(batch, generator=generator)
        loss = dense_vae_loss(batch, x_hat, posterior, model.config)
        optimizer.zero_grad(set_to_none=True)
        loss.total.backward()
        optimizer.step()
        ema.update(model)
        history.append({"step": float(step), "lr": lr, **loss.detached()})
    model.eval()
    return ema, history
