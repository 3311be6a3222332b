"""Sparsity-aware variational autoencoder over (dimension, value) token sequences."""

from .config import SavaeConfig
from .losses import LossBreakdown, kl_gaussian, savae_loss
from .model import (
    DecoderStepOutput,
    PosteriorParams,
    SavaeModel,
    SequenceLengthError,
    TeacherForcedOutput,
    TransformerBlock,
)
from .training import SavaeTrainConfig, learning_rate_at, train_savae

__all__ = [
    "DecoderStepOutput",
    "LossBreakdown",
    "PosteriorParams",
    "SavaeConfig",
    "SavaeModel",
    "SavaeTrainConfig",
    "SequenceLengthError",
    "TeacherForcedOutput",
    "TransformerBlock",
    "kl_gaussian",
    "learning_rate_at",
    "savae_loss",
    "train_savae",
]
