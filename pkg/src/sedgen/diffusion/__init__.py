"""Gaussian diffusion in latent space: schedule, backbone, loss, samplers, EMA."""

from .backbone import BackboneConfig, MlpUnet, time_features
from .ema import EmaState
from .losses import diffusion_loss, log_snr_tensor
from .sampling import SAMPLER_KINDS, eps_model_denoiser, latent_denoiser, sample
from .schedule import NoiseSchedule, cosine_gamma, forward_diffuse
from .training import (
    DiffusionTrainConfig,
    LatentStats,
    compute_latent_stats,
    train_denoiser,
)

__all__ = [
    "BackboneConfig",
    "MlpUnet",
    "time_features",
    "EmaState",
    "diffusion_loss",
    "log_snr_tensor",
    "SAMPLER_KINDS",
    "eps_model_denoiser",
    "latent_denoiser",
    "sample",
    "NoiseSchedule",
    "cosine_gamma",
    "forward_diffuse",
    "DiffusionTrainConfig",
    "LatentStats",
    "compute_latent_stats",
    "train_denoiser",
]
