"""Sinusoidal encoding of dimension indices.

The index of a non-zero dimension is embedded with interleaved sin/cos pairs,
entry 2i = sin(dim / base^(2i/d_model)) and entry 2i+1 the matching cosine.
This plays the role positional encodings play for sequence position, applied
to the feature index instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["EncodingConfig", "dimension_encoding", "encoding_matrix"]


@dataclass(frozen=True)
class EncodingConfig:
    d_model: int
    base: float = 20000.0

    def __post_init__(self) -> None:
        if self.d_model <= 0 or self.d_model % 2 != 0:
            raise ValueError(f"d_model must be even and positive, got {self.d_model}")
        if self.base <= 0:
            raise ValueError(f"base must be positive, got {self.base}")


def _angular_rates(cfg: EncodingConfig) -> np.ndarray:
    # one rate per sin/cos pair: 1 / base^(2i/d_model)
    i = np.arange(cfg.d_model // 2, dtype=np.float64)
    return cfg.base ** (-2.0 * i / cfg.d_model)


def dimension_encoding(dim_index: int, cfg: EncodingConfig) -> np.ndarray:
    """Encoding vector of a single dimension index; every entry in [-1, 1]."""
    if dim_index < 0:
        raise ValueError(f"dim_index must be non-negative, got {dim_index}")
    return encoding_matrix(np.asarray([dim_index]), cfg)[0]


def encoding_matrix(dim_indices: np.ndarray, cfg: EncodingConfig) -> np.ndarray:
    """Row-wise encodings for an array of dimension indices, shape (n, d_model)."""
    dims = np.asarray(dim_indices, dtype=np.float64)
    if np.any(dims < 0):
        raise ValueError("dim indices must be non-negative")
    angles = dims[..., None] * _angular_rates(cfg)[None, :]
    out = np.empty(dims.shape + (cfg.d_model,), dtype=np.float64)
    out[..., 0::2] = np.sin(angles)
    out[..., 1::2] = np.cos(angles)
    return out
