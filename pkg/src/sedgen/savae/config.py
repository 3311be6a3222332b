"""Configuration for the sparsity-aware autoencoder."""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["SavaeConfig"]


@dataclass(frozen=True)
class SavaeConfig:
    ambient_dim: int
    d_model: int = 64
    d_ff: int = 256
    num_heads: int = 4
    num_layers: int = 2
    dropout: float = 0.1
    beta: float = 1e-6
    latent_dim: int = 16
    max_sequence_length: int = 128
    encoding_base: float = 20000.0
    value_variance: float = 1.0  # fixed Gaussian variance of the value head, folded into the MSE term

    def __post_init__(self) -> None:
        if self.ambient_dim < 1:
            raise ValueError("ambient_dim must be positive")
        if self.d_model % 2 != 0 or self.d_model <= 0:
            raise ValueError("d_model must be even and positive (sin/cos pairing)")
        if self.d_model % self.num_heads != 0:
            raise ValueError("d_model must be divisible by num_heads")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if self.max_sequence_length < 1:
            raise ValueError("max_sequence_length must be >= 1")
        if self.value_variance <= 0:
            raise ValueError("value_variance must be positive")

    @property
    def vocab_size(self) -> int:
        """Dimension categories plus EOS plus the start marker."""
        return self.ambient_dim + 2

    @property
    def eos_index(self) -> int:
        """EOS category in the decoder's logit vector (start marker is never predicted)."""
        return self.ambient_dim

    @property
    def num_logits(self) -> int:
        return self.ambient_dim + 1
