"""Synthetic sparse dataset generators.

Two families:

* ``blob-grid`` — Gaussian-intensity clusters on a square grid, thresholded
  per sample to the target sparsity. Desk-scale stand-in for clustered
  detector-style images (positive values, localized support).
* ``sparse-tabular`` — per-sample support size drawn from a (truncated)
  binomial, support chosen uniformly without replacement, log-normal values.

Generation is deterministic given the spec seed, with per-sample streams
spawned from (seed, sample index) so ordering/parallelism cannot change the
output.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .codec import SparseSample

__all__ = ["DatasetSpec", "generate_dataset"]

_KINDS = ("blob-grid", "sparse-tabular")


@dataclass(frozen=True)
class DatasetSpec:
    kind: str
    ambient_dim: int
    sample_count: int
    target_sparsity: float
    seed: int
    # blob-grid controls
    blobs_min: int = 1
    blobs_max: int = 3
    blob_sigma_min: float = 0.8
    blob_sigma_max: float = 2.5
    blob_amp_log_mean: float = 0.0
    blob_amp_log_sigma: float = 0.4
    sparsity_jitter: float = 0.01
    # sparse-tabular controls
    max_support: int | None = None
    value_log_mean: float = 0.0
    value_log_sigma: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown dataset kind {self.kind!r}; expected one of {_KINDS}")
        if self.sample_count < 1:
            raise ValueError(f"sample_count must be >= 1, got {self.sample_count}")
        if not (0.0 < self.target_sparsity < 1.0):
            raise ValueError(
                f"target_sparsity must be in (0, 1), got {self.target_sparsity}"
            )
        if self.ambient_dim < 1:
            raise ValueError("ambient_dim must be positive")
        if self.kind == "blob-grid":
            g = int(round(self.ambient_dim**0.5))
            if g * g != self.ambient_dim:
                raise ValueError(
                    f"blob-grid needs a square ambient_dim, got {self.ambient_dim}"
                )
        if self.max_support is not None and self.max_support < 0:
            raise ValueError("max_support must be non-negative")

    def fields(self) -> dict:
        return asdict(self)


def _blob_grid_sample(spec: DatasetSpec, rng: np.random.Generator) -> SparseSample:
    g = int(round(spec.ambient_dim**0.5))
    n_blobs = int(rng.integers(spec.blobs_min, spec.blobs_max + 1))
    centers = rng.uniform(0.0, g, size=(n_blobs, 2))
    sigmas = rng.uniform(spec.blob_sigma_min, spec.blob_sigma_max, size=n_blobs)
    amps = rng.lognormal(spec.blob_amp_log_mean, spec.blob_amp_log_sigma, size=n_blobs)

    yy, xx = np.meshgrid(np.arange(g, dtype=np.float64), np.arange(g, dtype=np.float64), indexing="ij")
    intensity = np.zeros((g, g), dtype=np.float64)
    for c, s, a in zip(centers, sigmas, amps):
        d2 = (yy - c[0]) ** 2 + (xx - c[1]) ** 2
        intensity += a * np.exp(-d2 / (2.0 * s * s))

    flat = intensity.ravel()
    rho = spec.target_sparsity
    if spec.sparsity_jitter > 0:
        rho = float(np.clip(rho + rng.normal(0.0, spec.sparsity_jitter), 0.01, 0.999))
    # zero everything at or below the rho-quantile; the surviving cells carry
    # the blob intensities unchanged
    k = int(np.ceil(rho * spec.ambient_dim))
    if k >= spec.ambient_dim:
        k = spec.ambient_dim - 1
    thresh = np.partition(flat, k - 1)[k - 1] if k > 0 else -np.inf
    dense = np.where(flat <= thresh, 0.0, flat)
    dims = np.flatnonzero(dense != 0.0)
    return SparseSample(ambient_dim=spec.ambient_dim, dims=dims, values=dense[dims])


def _sparse_tabular_sample(spec: DatasetSpec, rng: np.random.Generator) -> SparseSample:
    cap = spec.ambient_dim if spec.max_support is None else min(spec.max_support, spec.ambient_dim)
    support = int(rng.binomial(spec.ambient_dim, 1.0 - spec.target_sparsity))
    support = min(support, cap)
    dims = np.sort(rng.choice(spec.ambient_dim, size=support, replace=False))
    values = rng.lognormal(spec.value_log_mean, spec.value_log_sigma, size=support)
    return SparseSample(ambient_dim=spec.ambient_dim, dims=dims, values=values)


def generate_dataset(spec: DatasetSpec) -> list[SparseSample]:
    """Generate `spec.sample_count` samples, deterministic in `spec.seed`."""
    streams = np.random.SeedSequence(spec.seed).spawn(spec.sample_count)
    make = _blob_grid_sample if spec.kind == "blob-grid" else _sparse_tabular_sample
    return [make(spec, np.random.default_rng(stream)) for stream in streams]
