"""Invertible, zero-preserving value scaling for sparse collections.

Every scheme maps exact zeros to exact zeros, so the sparsity pattern of the
data is untouched; the fitted parameters are recorded for inversion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .codec import SparseSample

__all__ = ["ScaleTransform", "preprocess_scale", "apply_scale", "invert_scale", "SCHEMES"]

SCHEMES = ("identity", "max-scale", "log1p-max-scale")


@dataclass(frozen=True)
class ScaleTransform:
    scheme: str
    scale: float = 1.0


def _all_values(samples: Sequence) -> np.ndarray:
    parts = []
    for s in samples:
        parts.append(s.values if isinstance(s, SparseSample) else np.asarray(s, dtype=np.float64))
    return np.concatenate(parts) if parts else np.zeros(0)


def _map_values(samples: Sequence, fn) -> list:
    out = []
    for s in samples:
        if isinstance(s, SparseSample):
            out.append(SparseSample(s.ambient_dim, s.dims, fn(s.values)))
        else:
            out.append(fn(np.asarray(s, dtype=np.float64)))
    return out


def preprocess_scale(samples: Sequence, scheme: str) -> tuple[list, ScaleTransform]:
    """Scale a collection of sparse or dense samples; returns (scaled, transform)."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scaling scheme {scheme!r}; expected one of {SCHEMES}")
    if scheme == "identity":
        return list(samples), ScaleTransform("identity", 1.0)

    vals = _all_values(samples)
    if scheme == "max-scale":
        scale = float(np.max(np.abs(vals))) if vals.size else 1.0
        scale = scale if scale > 0 else 1.0
        return _map_values(samples, lambda v: v / scale), ScaleTransform(scheme, scale)

    # log1p-max-scale: counts-style data, non-negative only
    if vals.size and np.min(vals) < 0:
        raise ValueError("log1p-max-scale requires non-negative values")
    scale = float(np.max(np.log1p(vals))) if vals.size else 1.0
    scale = scale if scale > 0 else 1.0
    return _map_values(samples, lambda v: np.log1p(v) / scale), ScaleTransform(scheme, scale)


def apply_scale(samples: Sequence, transform: ScaleTransform) -> list:
    """Apply an already-fitted transform (no refitting) to new samples."""
    if transform.scheme == "identity":
        return list(samples)
    if transform.scheme == "max-scale":
        return _map_values(samples, lambda v: v / transform.scale)
    if transform.scheme == "log1p-max-scale":
        return _map_values(samples, lambda v: np.log1p(v) / transform.scale)
    raise ValueError(f"unknown scaling scheme {transform.scheme!r}")


def invert_scale(samples: Sequence, transform: ScaleTransform) -> list:
    if transform.scheme == "identity":
        return list(samples)
    if transform.scheme == "max-scale":
        return _map_values(samples, lambda v: v * transform.scale)
    if transform.scheme == "log1p-max-scale":
        return _map_values(samples, lambda v: np.expm1(v * transform.scale))
    raise ValueError(f"unknown scaling scheme {transform.scheme!r}")
