"""Distributional and sparsity metrics.

All functions are pure: identical inputs (and seed, where subsampling
applies) give identical outputs. Each returns a small result record
carrying the value plus whatever determined it (seed, bandwidth,
degeneracy flags) so reports are self-describing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.stats import rankdata

from ..sparse_data.codec import GeneratedSample, SparseSample, densify

__all__ = [
    "MmdResult",
    "SparsityHistogram",
    "SpearmanResult",
    "W1Result",
    "mmd_rbf",
    "ordering_validity_rate",
    "per_dimension_means",
    "sample_value_sums",
    "sparsity",
    "sparsity_histogram",
    "spearman",
    "wasserstein1",
]

ArrayLike = Union[np.ndarray, Sequence[float]]
SampleSet = Union[np.ndarray, Sequence[SparseSample]]


def _as_matrix(data: SampleSet) -> np.ndarray:
    if isinstance(data, np.ndarray):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2:
            raise ValueError(f"expected (n, s) matrix, got shape {arr.shape}")
        return arr
    return densify(data)


def sparsity(x: Union[np.ndarray, SparseSample, GeneratedSample]) -> float:
    """Fraction of exactly-zero entries."""
    if isinstance(x, SparseSample):
        return x.sparsity
    if isinstance(x, GeneratedSample):
        dense = x.to_dense()
        return float(np.mean(dense == 0.0))
    arr = np.asarray(x, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty input")
    return float(np.mean(arr == 0.0))


@dataclass(frozen=True)
class SparsityHistogram:
    edges: np.ndarray  # (bins + 1,) on [0, 1]
    counts: np.ndarray  # (bins,)
    mean: float

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def sparsity_histogram(dataset: SampleSet, bins: int = 20) -> SparsityHistogram:
    """Histogram of per-sample sparsity on [0, 1].

    Bins are left-closed with the final bin closed on both ends, so
    sparsity exactly 1.0 lands in the last bin.
    """
    mat = _as_matrix(dataset)
    per_sample = np.mean(mat == 0.0, axis=1)
    counts, edges = np.histogram(per_sample, bins=bins, range=(0.0, 1.0))
    return SparsityHistogram(edges=edges, counts=counts, mean=float(per_sample.mean()))


@dataclass(frozen=True)
class W1Result:
    raw: float
    normalized: float
    n: int
    seed: int
    degenerate_scale: bool = False


def wasserstein1(a: ArrayLike, b: ArrayLike, *, seed: int = 0) -> W1Result:
    """One-dimensional Wasserstein-1 via sorted matching.

    Unequal sizes are handled by subsampling the larger multiset without
    replacement using the recorded seed. ``normalized`` divides by the
    standard deviation of ``a`` (the reference set); when that is zero
    the normalized value is NaN and the degeneracy flag is set.
    """
    xa = np.asarray(a, dtype=np.float64).ravel()
    xb = np.asarray(b, dtype=np.float64).ravel()
    if xa.size == 0 or xb.size == 0:
        raise ValueError("empty input multiset")
    rng = np.random.default_rng(seed)
    if xa.size > xb.size:
        xa = rng.choice(xa, size=xb.size, replace=False)
    elif xb.size > xa.size:
        xb = rng.choice(xb, size=xa.size, replace=False)
    raw = float(np.mean(np.abs(np.sort(xa) - np.sort(xb))))
    scale = float(np.std(xa))
    if scale == 0.0:
        return W1Result(raw=raw, normalized=float("nan"), n=xa.size, seed=seed,
                        degenerate_scale=True)
    return W1Result(raw=raw, normalized=raw / scale, n=xa.size, seed=seed)


@dataclass(frozen=True)
class MmdResult:
    mmd: float
    mmd_squared: float
    bandwidth: float
    bandwidth_fallback: bool = False


def _sq_dists(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - y[None, :, :]
    return np.sum(diff * diff, axis=-1)


def mmd_rbf(x: SampleSet, y: SampleSet, bandwidth: float | None = None) -> MmdResult:
    """Biased V-statistic MMD with a Gaussian kernel exp(-||x-y||^2 / (2 sigma^2)).

    Default bandwidth is the median pairwise distance of the pooled sets;
    a zero median falls back to sigma = 1 with a flag.
    """
    xm = _as_matrix(x)
    ym = _as_matrix(y)
    if xm.shape[0] == 0 or ym.shape[0] == 0:
        raise ValueError("empty sample set")
    if xm.shape[1] != ym.shape[1]:
        raise ValueError(f"dimensionality mismatch: {xm.shape[1]} vs {ym.shape[1]}")
    fallback = False
    if bandwidth is None:
        pooled = np.vstack([xm, ym])
        d2 = _sq_dists(pooled, pooled)
        upper = d2[np.triu_indices(pooled.shape[0], k=1)]
        median = float(np.sqrt(np.median(upper))) if upper.size else 0.0
        if median == 0.0:
            bandwidth, fallback = 1.0, True
        else:
            bandwidth = median
    elif bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    two_sigma_sq = 2.0 * bandwidth * bandwidth
    kxx = np.exp(-_sq_dists(xm, xm) / two_sigma_sq).mean()
    kyy = np.exp(-_sq_dists(ym, ym) / two_sigma_sq).mean()
    kxy = np.exp(-_sq_dists(xm, ym) / two_sigma_sq).mean()
    mmd_sq = float(kxx + kyy - 2.0 * kxy)
    return MmdResult(
        mmd=float(np.sqrt(max(0.0, mmd_sq))),
        mmd_squared=mmd_sq,
        bandwidth=float(bandwidth),
        bandwidth_fallback=fallback,
    )


@dataclass(frozen=True)
class SpearmanResult:
    value: float
    constant_input: bool = False


def spearman(x: ArrayLike, y: ArrayLike) -> SpearmanResult:
    """Pearson correlation of mid-ranks (ties get average rank).

    Constant input makes the correlation undefined; reported as NaN with
    a flag rather than raising.
    """
    xa = np.asarray(x, dtype=np.float64).ravel()
    ya = np.asarray(y, dtype=np.float64).ravel()
    if xa.size != ya.size:
        raise ValueError(f"length mismatch: {xa.size} vs {ya.size}")
    if xa.size < 2:
        raise ValueError("need at least 2 points")
    rx = rankdata(xa)
    ry = rankdata(ya)
    sx = rx.std()
    sy = ry.std()
    if sx == 0.0 or sy == 0.0:
        return SpearmanResult(value=float("nan"), constant_input=True)
    cov = np.mean((rx - rx.mean()) * (ry - ry.mean()))
    return SpearmanResult(value=float(cov / (sx * sy)))


def ordering_validity_rate(samples: Sequence[GeneratedSample]) -> float:
    """Fraction of generated samples whose dims are strictly ascending."""
    if not len(samples):
        raise ValueError("empty sample collection")
    return float(np.mean([s.is_ordered for s in samples]))


def per_dimension_means(data: SampleSet) -> np.ndarray:
    """Mean value of every dimension across the set (rank-correlation operand)."""
    return _as_matrix(data).mean(axis=0)


def sample_value_sums(data: SampleSet) -> np.ndarray:
    """Per-sample sum of values (the scalar compared under wasserstein1)."""
    return _as_matrix(data).sum(axis=1)
