"""Sparsity-exploiting generative modeling.

Subpackages:

* ``sparse_data`` — sparse/dense codec, dimension encodings, synthetic
  generators, IDX ingestion, value scaling.
* ``savae`` — transformer autoencoder over (dimension, value) tokens with
  a Gaussian latent and an autoregressive two-headed decoder.
* ``diffusion`` — cosine-schedule Gaussian diffusion on latents:
  clean-state regression with self-conditioning, DDPM/DDIM samplers, EMA.
* ``baselines`` — dense input-space diffusion, dense VAE, and global
  thresholding.
* ``evaluation`` — sparsity statistics, Wasserstein-1, MMD, Spearman,
  rate-distortion split by zero/non-zero dimensions, analytic FLOPs.
* ``cli`` — the ``sedgen`` command-line interface.
"""

from . import baselines, diffusion, evaluation, savae, sparse_data
from .checkpoints import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .configs import ConfigError, RunConfig, config_hash

__version__ = "0.1.0"

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "ConfigError",
    "RunConfig",
    "baselines",
    "config_hash",
    "diffusion",
    "evaluation",
    "load_checkpoint",
    "save_checkpoint",
    "savae",
    "sparse_data",
    "__version__",
]
