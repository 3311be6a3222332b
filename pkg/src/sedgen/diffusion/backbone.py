"""Denoising backbone: an MLP with mirrored skip connections.

The latent state has no grid structure, so the usual convolutional stack is
replaced by linear blocks arranged in a down/up "U": activations from the
down path are added back at the matching width on the way up. Time enters
every block as a learned projection of sinusoidal log-SNR features. With
self-conditioning enabled the input is the noisy state concatenated with the
previous clean-state estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

__all__ = ["BackboneConfig", "MlpUnet", "time_features"]


@dataclass(frozen=True)
class BackboneConfig:
    data_dim: int
    hidden_widths: tuple[int, ...] = (128, 64)
    time_embed_dim: int = 32
    time_hidden_dim: int = 64
    dropout: float = 0.0
    self_conditioning: bool = True

    def __post_init__(self) -> None:
        if self.data_dim < 1:
            raise ValueError("data_dim must be positive")
        if not self.hidden_widths or any(w < 1 for w in self.hidden_widths):
            raise ValueError("hidden_widths must be positive")
        if self.time_embed_dim % 2 != 0:
            raise ValueError("time_embed_dim must be even (sin/cos pairs)")
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))


def time_features(log_snr: torch.Tensor, dim: int) -> torch.Tensor:
    """Sinusoidal features of the log-SNR scalar, shape (batch, dim).

    Frequencies span two decades geometrically so both coarse and fine
    log-SNR variation is resolved.
    """
    half = dim // 2
    freqs = torch.exp(
        torch.linspace(math.log(0.02), math.log(2.0), half,
                       dtype=log_snr.dtype, device=log_snr.device)
    )
    angles = log_snr[:, None] * freqs[None, :]
    return torch.cat([torch.sin(angles), torch.cos(angles)], dim=-1)


class MlpUnet(nn.Module):
    """Predicts the clean state from (noisy state, log-SNR, previous estimate)."""

    def __init__(self, config: BackboneConfig):
        super().__init__()
        self.config = config
        widths = config.hidden_widths
        in_dim = config.data_dim * (2 if config.self_conditioning else 1)

        self.time_mlp = nn.Sequential(
            nn.Linear(config.time_embed_dim, config.time_hidden_dim),
            nn.SiLU(),
            nn.Linear(config.time_hidden_dim, config.time_hidden_dim),
        )
        self.in_proj = nn.Linear(in_dim, widths[0])
        self.down = nn.ModuleList(
            nn.Linear(widths[i], widths[i + 1]) for i in range(len(widths) - 1)
        )
        self.up = nn.ModuleList(
            nn.Linear(widths[i + 1], widths[i]) for i in reversed(range(len(widths) - 1))
        )
        # one time projection per block, in execution order (in, downs, ups)
        block_widths = [widths[0], *widths[1:], *reversed(widths[:-1])]
        self.time_proj = nn.ModuleList(
            nn.Linear(config.time_hidden_dim, w) for w in block_widths
        )
        self.dropout = nn.Dropout(config.dropout)
        self.out_proj = nn.Linear(widths[0], config.data_dim)
        nn.init.zeros_(self.out_proj.weight)
        nn.init.zeros_(self.out_proj.bias)

    def forward(self, z_t: torch.Tensor, log_snr: torch.Tensor,
                z_tilde: torch.Tensor | None = None) -> torch.Tensor:
        cfg = self.config
        if z_t.shape[-1] != cfg.data_dim:
            raise ValueError(f"expected data dim {cfg.data_dim}, got {z_t.shape[-1]}")
        if cfg.self_conditioning:
            if z_tilde is None:
                z_tilde = torch.zeros_like(z_t)
            if z_tilde.shape != z_t.shape:
                raise ValueError("z_tilde shape must match z_t")
            x = torch.cat([z_t, z_tilde], dim=-1)
        else:
            x = z_t

        temb = self.time_mlp(time_features(log_snr.to(z_t.dtype), cfg.time_embed_dim))
        tproj = iter(self.time_proj)

        h = torch.nn.functional.silu(self.in_proj(x) + next(tproj)(temb))
        h = self.dropout(h)
        skips = [h]
        for layer in self.down:
            h = torch.nn.functional.silu(layer(h) + next(tproj)(temb))
            h = self.dropout(h)
            skips.append(h)
        skips.pop()  # bottom activation is the running state, not a skip
        for layer in self.up:
            h = torch.nn.functional.silu(layer(h) + next(tproj)(temb)) + skips.pop()
            h = self.dropout(h)
        return self.out_proj(h)
