"""Training loop for the sparsity-aware autoencoder."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import torch

from ..diffusion.ema import EmaState
from ..sparse_data.codec import SparseSample
from .losses import LossBreakdown, savae_loss
from .model import SavaeModel

__all__ = ["SavaeTrainConfig", "train_savae", "learning_rate_at"]


@dataclass(frozen=True)
class SavaeTrainConfig:
    steps: int = 2000
    batch_size: int = 64
    learning_rate: float = 3e-4
    warmup_steps: int = 100
    final_lr_fraction: float = 0.1
    ema_decay: float = 0.9999
    seed: int = 0

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0 < self.final_lr_fraction <= 1:
            raise ValueError("final_lr_fraction must be in (0, 1]")
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps must be >= 0")


def learning_rate_at(step: int, config: SavaeTrainConfig) -> float:
    """Linear warmup to the base rate, then exponential decay to its final fraction."""
    if config.warmup_steps and step < config.warmup_steps:
        return config.learning_rate * (step + 1) / config.warmup_steps
    span = max(config.steps - config.warmup_steps, 1)
    progress = min(step - config.warmup_steps, span) / span
    return config.learning_rate * config.final_lr_fraction**progress


def train_savae(
    model: SavaeModel,
    dataset: Sequence[SparseSample],
    config: SavaeTrainConfig,
    *,
    log_every: int = 0,
    log_fn: Optional[Callable[[int, LossBreakdown], None]] = None,
) -> tuple[EmaState, list[dict[str, float]]]:
    """Optimise in place; returns the EMA shadow and a per-step loss history."""
    if not dataset:
        raise ValueError("empty training dataset")
    generator = torch.Generator().manual_seed(config.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    ema = EmaState.from_module(model, decay=config.ema_decay)
    history: list[dict[str, float]] = []

    n = len(dataset)
    order = torch.randperm(n, generator=generator)
    cursor = 0
    model.train()
    for step in range(config.steps):
        if cursor + config.batch_size > n:
            order = torch.randperm(n, generator=generator)
            cursor = 0
        idx = order[cursor : cursor + config.batch_size]
        cursor += config.batch_size
        batch = [dataset[int(i)] for i in idx]

        lr = learning_rate_at(step, config)
        for group in optimizer.param_groups:
            group["lr"] = lr

        posterior, z = model.encode(batch, generator=generator)
        outputs = model.decode_teacher_forced(z, batch)
        loss = savae_loss(outputs, batch, posterior, model.config)

        optimizer.zero_grad(set_to_none=True)
        loss.total.backward()
        optimizer.step()
        ema.update(model)

        row = {"step": float(step), "lr": lr, **loss.detached()}
        history.append(row)
        if log_fn is not None and log_every and (step % log_every == 0 or step == config.steps - 1):
            log_fn(step, loss)
    model.eval()
    return ema, history
