"""Rate-distortion analysis of a dense input-space diffusion model.

Rate at timestep t is the suffix sum over inner steps s > t of the KL
between the forward posterior q(x_{s-1} | x_s, x_0) and the model's
reverse transition p(x_{s-1} | x_s). Both are Gaussians with the shared
posterior variance and means affine in the clean state, so the
per-dimension KL collapses to c1(s)^2 (x_0 - x0_hat)^2 / (2 sigma_s^2)
with c1 the posterior's clean-state coefficient. Rates and distortions
are pooled separately over dimensions where x_0 = 0 versus x_0 != 0,
each normalized by its pooled dimension count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import torch

from ..diffusion.sampling import DenoiseFn
from ..diffusion.schedule import NoiseSchedule, forward_diffuse

__all__ = ["RdPoint", "default_grid", "rate_distortion"]


@dataclass(frozen=True)
class RdPoint:
    t: int
    rate_zero: float
    rate_nonzero: float
    distortion_zero: float
    distortion_nonzero: float

    def __post_init__(self) -> None:
        for name in ("rate_zero", "rate_nonzero"):
            v = getattr(self, name)
            if not (math.isnan(v) or v >= 0.0):
                raise ValueError(f"{name} must be >= 0, got {v}")


def default_grid(num_steps: int, points: int = 50) -> list[int]:
    """Evenly spaced integer timesteps covering [0, T], deduplicated."""
    grid = np.unique(np.linspace(0, num_steps, points).round().astype(int))
    return [int(t) for t in grid]


def _posterior_coeffs(schedule: NoiseSchedule, s: int) -> tuple[float, float]:
    """(c1, var): clean-state coefficient and variance of q(x_{s-1} | x_s, x_0)."""
    g_s = float(schedule.gammas[s])
    g_prev = float(schedule.gammas[s - 1])
    alpha = g_s / g_prev
    c1 = math.sqrt(g_prev) * (1.0 - alpha) / (1.0 - g_s)
    var = (1.0 - alpha) * (1.0 - g_prev) / (1.0 - g_s)
    return c1, var


@torch.no_grad()
def rate_distortion(
    denoise: DenoiseFn,
    schedule: NoiseSchedule,
    x0: torch.Tensor,
    *,
    grid: Optional[Sequence[int]] = None,
    mc_samples: int = 16,
    generator: Optional[torch.Generator] = None,
) -> list[RdPoint]:
    """Rate-distortion curve of a clean-state denoiser over (n, s) data.

    ``denoise(x_t, t, z_tilde)`` must return the model's clean-state
    estimate; noise-predicting models go through their sampler adapter.
    An empty zero or non-zero partition yields NaN for that series.
    """
    if x0.ndim != 2 or x0.shape[0] == 0:
        raise ValueError(f"expected non-empty (n, s) data, got {tuple(x0.shape)}")
    if mc_samples < 1:
        raise ValueError("mc_samples must be >= 1")
    T = schedule.num_steps
    if grid is None:
        grid = default_grid(T)
    grid = [int(t) for t in grid]
    for t in grid:
        if not 0 <= t <= T:
            raise ValueError(f"grid timestep {t} outside [0, {T}]")

    n, dim = x0.shape
    zero_mask = x0 == 0.0
    n_zero = int(zero_mask.sum())
    n_nonzero = n * dim - n_zero
    tiled = x0.repeat(mc_samples, 1)
    tiled_mask = zero_mask.repeat(mc_samples, 1)

    def _mc_sq_error(t: int) -> tuple[float, float]:
        """Pooled squared reconstruction error at one timestep, split by partition."""
        eps = torch.randn(tiled.shape, generator=generator, dtype=x0.dtype, device=x0.device)
        ts = torch.full((tiled.shape[0],), t, dtype=torch.long, device=x0.device)
        x_t = forward_diffuse(tiled, ts, eps, schedule)
        x0_hat = denoise(x_t, t, torch.zeros_like(x_t))
        sq = (tiled - x0_hat) ** 2
        zero_sum = float(sq[tiled_mask].sum()) / mc_samples
        nonzero_sum = float(sq[~tiled_mask].sum()) / mc_samples
        return zero_sum, nonzero_sum

    # Expected KL per inner step, pooled over (sample, dimension) pairs.
    kl_zero = np.zeros(T + 1)
    kl_nonzero = np.zeros(T + 1)
    for s in range(1, T + 1):
        c1, var = _posterior_coeffs(schedule, s)
        # Clipping can make gamma(s) == gamma(s-1); the step is then an
        # identity (c1 = 0, var = 0) and transmits no information.
        scale = 0.0 if var == 0.0 else c1 * c1 / (2.0 * var)
        zero_sum, nonzero_sum = _mc_sq_error(s)
        kl_zero[s] = scale * zero_sum
        kl_nonzero[s] = scale * nonzero_sum

    # rate(t) = sum_{s > t} E[KL_s]; suffix sums make rate(T) exactly 0.
    suffix_zero = np.concatenate([np.cumsum(kl_zero[::-1])[::-1][1:], [0.0]])
    suffix_nonzero = np.concatenate([np.cumsum(kl_nonzero[::-1])[::-1][1:], [0.0]])

    points: list[RdPoint] = []
    for t in grid:
        zero_sum, nonzero_sum = _mc_sq_error(t)
        d_zero = math.sqrt(zero_sum / n_zero) if n_zero else float("nan")
        d_nonzero = math.sqrt(nonzero_sum / n_nonzero) if n_nonzero else float("nan")
        r_zero = suffix_zero[t] / n_zero if n_zero else float("nan")
        r_nonzero = suffix_nonzero[t] / n_nonzero if n_nonzero else float("nan")
        points.append(
            RdPoint(
                t=t,
                rate_zero=float(r_zero),
                rate_nonzero=float(r_nonzero),
                distortion_zero=float(d_zero),
                distortion_nonzero=float(d_nonzero),
            )
        )
    return points
