"""Post-hoc sparsification of dense model outputs by a global threshold.

The threshold is the smallest pooled |value| whose inclusive cut reaches the
training set's mean sparsity on a calibration set of generated samples, so
that zeroing |x| <= tau reproduces the target zero fraction on outputs that
are almost surely tie-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..sparse_data.codec import SparseSample, densify, nze_extract

__all__ = [
    "ThresholdCalibration",
    "threshold_calibrate",
    "apply_threshold",
    "apply_threshold_samples",
]


@dataclass(frozen=True)
class ThresholdCalibration:
    tau: float
    target_sparsity: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.target_sparsity <= 1.0:
            raise ValueError(f"target_sparsity must be in [0, 1], got {self.target_sparsity}")
        if not self.tau >= 0.0:
            raise ValueError(f"tau must be non-negative, got {self.tau}")


def _as_matrix(data: np.ndarray | Sequence[SparseSample]) -> np.ndarray:
    if isinstance(data, np.ndarray):
        if data.ndim == 1:
            data = data[None, :]
        if data.ndim != 2:
            raise ValueError(f"expected (n, s) matrix, got shape {data.shape}")
        return np.asarray(data, dtype=np.float64)
    return densify(data)


def threshold_calibrate(
    train: Sequence[SparseSample] | np.ndarray,
    calibration: np.ndarray | Sequence[SparseSample],
) -> ThresholdCalibration:
    """Pick tau so the calibration set's zero fraction reaches the training mean sparsity.

    tau is the ceil(rho*m)-th order statistic of the pooled |values| of the
    calibration set (0 when rho = 0), the smallest inclusive cut achieving
    sparsity >= rho there.
    """
    if isinstance(train, np.ndarray):
        train_mat = _as_matrix(train)
        rho = float(np.mean(train_mat == 0.0))
    else:
        if not len(train):
            raise ValueError("empty training set")
        rho = float(np.mean([s.sparsity for s in train]))
    pooled = np.abs(_as_matrix(calibration)).ravel()
    if pooled.size == 0:
        raise ValueError("empty calibration set")
    k = math.ceil(rho * pooled.size)
    tau = 0.0 if k == 0 else float(np.partition(pooled, k - 1)[k - 1])
    return ThresholdCalibration(tau=tau, target_sparsity=rho)


def apply_threshold(x: np.ndarray, calib: ThresholdCalibration) -> np.ndarray:
    """Zero entries with |x| <= tau; everything else is preserved bit-exactly."""
    arr = np.asarray(x, dtype=np.float64)
    return np.where(np.abs(arr) <= calib.tau, 0.0, arr)


def apply_threshold_samples(
    samples: Sequence[SparseSample], calib: ThresholdCalibration
) -> list[SparseSample]:
    """Thresholding lifted to sparse samples (re-extracted after zeroing)."""
    out = []
    for s in samples:
        dense = apply_threshold(s.to_dense(), calib)
        out.append(nze_extract(dense))
    return out
