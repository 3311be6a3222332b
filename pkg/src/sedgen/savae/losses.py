"""Training objective for the sparsity-aware autoencoder.

Per sample the loss sums a categorical NLL over dimension choices
(including the EOS step), a Gaussian NLL of the values reduced to a
scaled squared error, and a beta-weighted KL of the diagonal Gaussian
posterior against the standard normal; the batch loss is the mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import torch
import torch.nn.functional as F
from torch import Tensor

from ..sparse_data.codec import SparseSample
from .config import SavaeConfig
from .model import PosteriorParams, TeacherForcedOutput

__all__ = ["LossBreakdown", "kl_gaussian", "savae_loss"]


@dataclass(frozen=True)
class LossBreakdown:
    """Mean-over-batch loss terms; ``total`` carries the graph for backprop."""

    dim_nll: Tensor
    value_mse: Tensor
    kl: Tensor
    total: Tensor

    def detached(self) -> dict[str, float]:
        return {
            "dim_nll": float(self.dim_nll.detach()),
            "value_mse": float(self.value_mse.detach()),
            "kl": float(self.kl.detach()),
            "total": float(self.total.detach()),
        }


def kl_gaussian(mu: Tensor, log_var: Tensor) -> Tensor:
    """Per-sample KL( N(mu, diag(exp(log_var))) || N(0, I) ), summed over coordinates."""
    if mu.shape != log_var.shape:
        raise ValueError(f"mu shape {tuple(mu.shape)} != log_var shape {tuple(log_var.shape)}")
    return 0.5 * (mu.pow(2) + log_var.exp() - 1.0 - log_var).sum(dim=-1)


def _target_tensors(
    targets: Sequence[SparseSample], config: SavaeConfig, device: torch.device, steps: int
) -> tuple[Tensor, Tensor]:
    """Teacher-forcing targets: dim index per step (EOS at step l) and value per token step."""
    batch = len(targets)
    dim_t = torch.zeros(batch, steps, dtype=torch.long, device=device)
    val_t = torch.zeros(batch, max(steps - 1, 0), dtype=torch.float64, device=device)
    for i, s in enumerate(targets):
        n = s.dims.size
        dim_t[i, :n] = torch.from_numpy(s.dims.astype("int64"))
        dim_t[i, n] = config.eos_index
        if n:
            val_t[i, :n] = torch.from_numpy(s.values)
    return dim_t, val_t


def savae_loss(
    outputs: TeacherForcedOutput,
    targets: Sequence[SparseSample],
    posterior: PosteriorParams,
    config: SavaeConfig,
) -> LossBreakdown:
    """Batch-mean loss of teacher-forced decoder heads against their targets."""
    batch, steps, num_logits = outputs.dim_logits.shape
    if batch != len(targets):
        raise ValueError(f"output batch {batch} != target batch {len(targets)}")
    if num_logits != config.num_logits:
        raise ValueError(f"logit width {num_logits} != expected {config.num_logits}")
    device = outputs.dim_logits.device
    dim_t, val_t = _target_tensors(targets, config, device, steps)

    ce = F.cross_entropy(
        outputs.dim_logits.reshape(batch * steps, num_logits),
        dim_t.reshape(batch * steps),
        reduction="none",
    ).reshape(batch, steps)
    step_mask = outputs.step_mask.to(ce.dtype)
    dim_nll = (ce * step_mask).sum(dim=1).mean()

    # Value head applies to token steps only (EOS has no value target).
    token_mask = outputs.step_mask[:, 1:].to(outputs.value_means.dtype)
    pred = outputs.value_means[:, : steps - 1]
    sq = (pred - val_t.to(pred.dtype)).pow(2) * token_mask
    value_mse = (sq.sum(dim=1) / config.value_variance).mean()

    kl = kl_gaussian(posterior.mu, posterior.log_var).mean()
    total = dim_nll + value_mse + config.beta * kl
    return LossBreakdown(dim_nll=dim_nll, value_mse=value_mse, kl=kl, total=total)
