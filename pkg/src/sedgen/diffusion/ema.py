"""Exponential moving average of module parameters; sampling uses the shadow."""

from __future__ import annotations

from contextlib import contextmanager

import torch
from torch import nn

__all__ = ["EmaState"]


class EmaState:
    """Shadow copy updated as shadow <- decay*shadow + (1-decay)*param."""

    def __init__(self, shadow: dict[str, torch.Tensor], decay: float = 0.9999):
        if not (0.0 <= decay <= 1.0):
            raise ValueError(f"decay must be in [0, 1], got {decay}")
        self.shadow = shadow
        self.decay = decay

    @classmethod
    def from_module(cls, module: nn.Module, decay: float = 0.9999) -> "EmaState":
        shadow = {k: p.detach().clone() for k, p in module.named_parameters()}
        return cls(shadow, decay)

    @torch.no_grad()
    def update(self, module: nn.Module) -> "EmaState":
        for name, param in module.named_parameters():
            if name not in self.shadow:
                raise ValueError(f"unknown parameter {name!r} in EMA update")
            s = self.shadow[name]
            if s.shape != param.shape:
                raise ValueError(
                    f"shape mismatch for {name!r}: {tuple(s.shape)} vs {tuple(param.shape)}"
                )
            s.mul_(self.decay).add_(param.detach(), alpha=1.0 - self.decay)
        return self

    @torch.no_grad()
    def copy_to(self, module: nn.Module) -> None:
        for name, param in module.named_parameters():
            param.copy_(self.shadow[name])

    @contextmanager
    def swapped(self, module: nn.Module):
        """Temporarily run a module with the shadow weights."""
        backup = {k: p.detach().clone() for k, p in module.named_parameters()}
        self.copy_to(module)
        try:
            yield module
        finally:
            with torch.no_grad():
                for name, param in module.named_parameters():
                    param.copy_(backup[name])
