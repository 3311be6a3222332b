"""Dense diffusion, dense VAE, and thresholded baselines."""

from .dense_diffusion import DenseDmConfig, build_dense_backbone, dense_ddpm_loss, dense_sample
from .dense_vae import DenseVae, DenseVaeConfig, DenseVaeLoss, dense_vae_loss, train_dense_vae
from .thresholding import (
    ThresholdCalibration,
    apply_threshold,
    apply_threshold_samples,
    threshold_calibrate,
)

__all__ = [
    "DenseDmConfig",
    "build_dense_backbone",
    "dense_ddpm_loss",
    "dense_sample",
    "DenseVae",
    "DenseVaeConfig",
    "DenseVaeLoss",
    "dense_vae_loss",
    "train_dense_vae",
    "ThresholdCalibration",
    "apply_threshold",
    "apply_threshold_samples",
    "threshold_calibrate",
]
