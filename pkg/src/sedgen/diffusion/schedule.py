"""Discrete noise schedule for the Gaussian forward process.

gamma(t) is the signal-retention coefficient: the noisy state at step t is
z_t = sqrt(gamma(t)) z_0 + sqrt(1 - gamma(t)) eps. The cosine form follows the
squared-cosine closed form with a small offset, clipped at both ends so
per-step ratios and posterior variances stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch

__all__ = ["NoiseSchedule", "cosine_gamma", "forward_diffuse"]

_COSINE_OFFSET = 0.008
_CLIP = 1e-5


def cosine_gamma(t: float, num_steps: int, offset: float = _COSINE_OFFSET) -> float:
    """Unclipped squared-cosine gamma(t) on a discrete grid of num_steps steps."""
    if not (0 <= t <= num_steps):
        raise ValueError(f"t must be in [0, {num_steps}], got {t}")

    def f(u: float) -> float:
        return math.cos((u / num_steps + offset) / (1.0 + offset) * math.pi / 2.0) ** 2

    return f(t) / f(0)


@dataclass(frozen=True)
class NoiseSchedule:
    """gamma(t) for t in {0..T}, monotone non-increasing, with a log-SNR view."""

    gammas: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        g = np.asarray(self.gammas, dtype=np.float64)
        object.__setattr__(self, "gammas", g)
        if g.ndim != 1 or len(g) < 2:
            raise ValueError("schedule needs gamma values for t = 0..T with T >= 1")
        if np.any(np.diff(g) > 0):
            raise ValueError("gamma must be monotonically non-increasing")
        if g[0] < 1.0 - 1e-5:
            raise ValueError(f"gamma(0) must be within 1e-5 of 1, got {g[0]}")
        if g[-1] > 1e-3:
            raise ValueError(f"gamma(T) must be <= 1e-3, got {g[-1]}")
        if np.any(g <= 0) or np.any(g >= 1):
            raise ValueError("gamma values must lie strictly inside (0, 1)")

    @classmethod
    def cosine(cls, num_steps: int = 1000, offset: float = _COSINE_OFFSET) -> "NoiseSchedule":
        t = np.arange(num_steps + 1, dtype=np.float64)
        f = np.cos((t / num_steps + offset) / (1.0 + offset) * np.pi / 2.0) ** 2
        g = np.clip(f / f[0], _CLIP, 1.0 - _CLIP)
        return cls(gammas=g)

    @property
    def num_steps(self) -> int:
        return len(self.gammas) - 1

    def gamma(self, t) -> np.ndarray | float:
        return self.gammas[t]

    def log_snr(self, t) -> np.ndarray | float:
        g = self.gammas[t]
        return np.log(g / (1.0 - g))


def forward_diffuse(z0: torch.Tensor, t: torch.Tensor | int, eps: torch.Tensor,
                    schedule: NoiseSchedule) -> torch.Tensor:
    """Noise clean states to step t: sqrt(gamma) z0 + sqrt(1-gamma) eps."""
    if isinstance(t, int):
        t = torch.full((z0.shape[0],), t, dtype=torch.long)
    g = torch.as_tensor(schedule.gammas, dtype=z0.dtype, device=z0.device)[t]
    g = g.reshape(-1, *([1] * (z0.ndim - 1)))
    return torch.sqrt(g) * z0 + torch.sqrt(1.0 - g) * eps
