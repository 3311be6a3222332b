"""Transformer autoencoder over sparse (dimension, value) token sequences.

The encoder embeds each non-zero coordinate as a value projection plus a
deterministic dimension encoding, runs a stack of post-norm transformer
blocks, mean-pools over the (unordered) tokens, and emits a diagonal
Gaussian posterior.  The decoder autoregressively reconstructs the
sequence in ascending-dimension order, conditioned on the latent through
a learned start token, with one categorical head over dimensions plus
EOS and one scalar head for the value at the step's dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import torch
from torch import Tensor, nn

from ..sparse_data.codec import GeneratedSample, SparseSample
from .config import SavaeConfig

__all__ = [
    "DecoderStepOutput",
    "PosteriorParams",
    "SavaeModel",
    "SequenceLengthError",
    "TeacherForcedOutput",
    "TransformerBlock",
]


class SequenceLengthError(ValueError):
    """A sample carries more non-zeros than the model is configured for."""


@dataclass(frozen=True)
class PosteriorParams:
    """Diagonal Gaussian posterior q(z|x) for a batch."""

    mu: Tensor  # (batch, latent_dim)
    log_var: Tensor  # (batch, latent_dim)


@dataclass(frozen=True)
class DecoderStepOutput:
    """Heads for one decoding step of one sample."""

    dim_logits: Tensor  # (ambient_dim + 1,) with EOS last
    value_mean: Tensor  # scalar


@dataclass(frozen=True)
class TeacherForcedOutput:
    """Batched decoder heads under teacher forcing.

    Step ``j`` predicts the ``j``-th token of the target (the final valid
    step predicts EOS); positions past a sample's length are padding and
    are excluded via ``step_mask``.
    """

    dim_logits: Tensor  # (batch, max_len + 1, ambient_dim + 1)
    value_means: Tensor  # (batch, max_len + 1)
    step_mask: Tensor  # (batch, max_len + 1) bool, True at valid steps
    lengths: Tensor  # (batch,) long, number of non-zero tokens per sample

    def steps(self, i: int) -> list[DecoderStepOutput]:
        """Per-step heads for sample ``i`` (length ``l_i + 1``, EOS step last)."""
        n = int(self.lengths[i].item()) + 1
        return [
            DecoderStepOutput(self.dim_logits[i, j], self.value_means[i, j])
            for j in range(n)
        ]


class TransformerBlock(nn.Module):
    """Post-norm transformer block: self-attention then a ReLU feed-forward."""

    def __init__(self, d_model: int, d_ff: int, num_heads: int, dropout: float) -> None:
        super().__init__()
        self.self_attn = nn.MultiheadAttention(
            d_model, num_heads, dropout=dropout, batch_first=True
        )
        self.ff = nn.Sequential(
            nn.Linear(d_model, d_ff),
            nn.ReLU(),
            nn.Dropout(dropout),
            nn.Linear(d_ff, d_model),
        )
        self.norm1 = nn.LayerNorm(d_model)
        self.norm2 = nn.LayerNorm(d_model)
        self.dropout = nn.Dropout(dropout)

    def forward(
        self,
        x: Tensor,
        attn_mask: Optional[Tensor] = None,
        key_padding_mask: Optional[Tensor] = None,
    ) -> Tensor:
        attn, _ = self.self_attn(
            x,
            x,
            x,
            attn_mask=attn_mask,
            key_padding_mask=key_padding_mask,
            need_weights=False,
        )
        x = self.norm1(x + self.dropout(attn))
        x = self.norm2(x + self.dropout(self.ff(x)))
        return x


def _causal_mask(n: int, device: torch.device) -> Tensor:
    """Boolean (n, n) mask with True above the diagonal (disallowed attention)."""
    return torch.triu(torch.ones(n, n, dtype=torch.bool, device=device), diagonal=1)


class SavaeModel(nn.Module):
    def __init__(self, config: SavaeConfig) -> None:
        super().__init__()
        self.config = config
        d = config.d_model
        self.value_proj = nn.Linear(1, d)
        self.empty_token = nn.Parameter(torch.zeros(d))
        self.encoder_blocks = nn.ModuleList(
            TransformerBlock(d, config.d_ff, config.num_heads, config.dropout)
            for _ in range(config.num_layers)
        )
        self.mu_head = nn.Linear(d, config.latent_dim)
        self.log_var_head = nn.Linear(d, config.latent_dim)
        self.z_proj = nn.Linear(config.latent_dim, d)
        self.decoder_blocks = nn.ModuleList(
            TransformerBlock(d, config.d_ff, config.num_heads, config.dropout)
            for _ in range(config.num_layers)
        )
        self.dim_head = nn.Linear(d, config.num_logits)
        self.value_head = nn.Linear(d, 1)
        self.register_buffer(
            "_angular_rates", _angular_rate_table(config), persistent=False
        )

    # ------------------------------------------------------------------
    # embeddings

    def dimension_encoding(self, dims: Tensor) -> Tensor:
        """Sinusoidal encoding of integer dimension indices.

        ``dims`` is any integer tensor; the result appends a trailing
        ``d_model`` axis with sin at even positions and cos at odd ones.
        """
        angles = dims.to(self._angular_rates.dtype).unsqueeze(-1) * self._angular_rates
        out = torch.empty(
            *dims.shape, self.config.d_model,
            dtype=self._angular_rates.dtype, device=dims.device,
        )
        out[..., 0::2] = torch.sin(angles)
        out[..., 1::2] = torch.cos(angles)
        return out.to(self.value_proj.weight.dtype)

    def _token_embeddings(self, dims: Tensor, values: Tensor) -> Tensor:
        """(batch, length) dims/values -> (batch, length, d_model) tokens."""
        proj = self.value_proj(values.to(self.value_proj.weight.dtype).unsqueeze(-1))
        return proj + self.dimension_encoding(dims)

    def _pad_batch(
        self, samples: Sequence[SparseSample]
    ) -> tuple[Tensor, Tensor, Tensor]:
        """Pack samples into padded (dims, values, lengths) tensors."""
        cfg = self.config
        device = self.value_proj.weight.device
        lengths = torch.tensor([s.dims.size for s in samples], dtype=torch.long)
        too_long = int(lengths.max().item()) if len(samples) else 0
        if too_long > cfg.max_sequence_length:
            raise SequenceLengthError(
                f"sample with {too_long} non-zeros exceeds "
                f"max_sequence_length={cfg.max_sequence_length}"
            )
        for s in samples:
            if s.ambient_dim != cfg.ambient_dim:
                raise ValueError(
                    f"sample ambient_dim {s.ambient_dim} != model "
                    f"ambient_dim {cfg.ambient_dim}"
                )
        max_len = max(int(lengths.max().item()), 1) if len(samples) else 1
        dims = torch.zeros(len(samples), max_len, dtype=torch.long)
        values = torch.zeros(len(samples), max_len, dtype=torch.float64)
        for i, s in enumerate(samples):
            n = s.dims.size
            if n:
                dims[i, :n] = torch.from_numpy(s.dims.astype("int64"))
                values[i, :n] = torch.from_numpy(s.values)
        return dims.to(device), values.to(device), lengths.to(device)

    # ------------------------------------------------------------------
    # encoder

    def encode(
        self,
        samples: Sequence[SparseSample],
        *,
        deterministic: bool = False,
        generator: Optional[torch.Generator] = None,
        eps: Optional[Tensor] = None,
    ) -> tuple[PosteriorParams, Tensor]:
        """Posterior parameters and a latent draw for each sample.

        With ``deterministic=True`` the returned latent is the posterior
        mean; otherwise it is one reparameterised draw mu + sigma * eps.
        """
        dims, values, lengths = self._pad_batch(samples)
        batch, max_len = dims.shape
        tokens = self._token_embeddings(dims, values)
        # Empty samples get a single learned placeholder token.
        empty = lengths == 0
        if bool(empty.any()):
            tokens[empty, 0] = self.empty_token.to(tokens.dtype)
        effective = torch.clamp(lengths, min=1)
        positions = torch.arange(max_len, device=tokens.device)
        pad_mask = positions.unsqueeze(0) >= effective.unsqueeze(1)

        h = tokens
        for block in self.encoder_blocks:
            h = block(h, key_padding_mask=pad_mask)

        keep = (~pad_mask).unsqueeze(-1).to(h.dtype)
        pooled = (h * keep).sum(dim=1) / effective.unsqueeze(1).to(h.dtype)
        mu = self.mu_head(pooled)
        log_var = self.log_var_head(pooled)
        posterior = PosteriorParams(mu=mu, log_var=log_var)
        if deterministic:
            return posterior, mu
        if eps is None:
            eps = torch.empty_like(mu).normal_(generator=generator)
        elif eps.shape != mu.shape:
            raise ValueError(f"eps shape {tuple(eps.shape)} != {tuple(mu.shape)}")
        z = mu + torch.exp(0.5 * log_var) * eps
        return posterior, z

    # ------------------------------------------------------------------
    # decoder

    def _decoder_hidden(self, z: Tensor, dims: Tensor, values: Tensor) -> Tensor:
        """Run the decoder stack over [start(z), token_1, ..., token_L]."""
        start = self.z_proj(z.to(self.z_proj.weight.dtype)).unsqueeze(1)
        if dims.shape[1]:
            h = torch.cat([start, self._token_embeddings(dims, values)], dim=1)
        else:
            h = start
        mask = _causal_mask(h.shape[1], h.device)
        for block in self.decoder_blocks:
            h = block(h, attn_mask=mask)
        return h

    def decode_teacher_forced(
        self, z: Tensor, targets: Sequence[SparseSample]
    ) -> TeacherForcedOutput:
        """Decoder heads at every step with ground-truth tokens as input.

        Step ``j`` sees the start token and the first ``j`` target tokens
        and predicts target ``j`` (EOS at ``j = l``).
        """
        if z.shape[0] != len(targets):
            raise ValueError(
                f"latent batch {z.shape[0]} != target batch {len(targets)}"
            )
        dims, values, lengths = self._pad_batch(targets)
        h = self._decoder_hidden(z, dims, values)
        dim_logits = self.dim_head(h)
        value_means = self.value_head(h).squeeze(-1)
        steps = torch.arange(dim_logits.shape[1], device=lengths.device)
        step_mask = steps.unsqueeze(0) <= lengths.unsqueeze(1)
        return TeacherForcedOutput(
            dim_logits=dim_logits,
            value_means=value_means,
            step_mask=step_mask,
            lengths=lengths,
        )

    @torch.no_grad()
    def decode_greedy(
        self,
        z: Tensor,
        *,
        max_steps: Optional[int] = None,
        constrained: bool = False,
    ) -> list[GeneratedSample]:
        """Greedy autoregressive decoding of a latent batch.

        By default the dimension head's argmax is taken verbatim, so the
        emitted index sequence may repeat or go backwards; the result
        records generation order and flags whether it was strictly
        ascending.  With ``constrained=True`` every dimension at or below
        the previously emitted one is masked out, which forces validity.
        """
        cfg = self.config
        if max_steps is None:
            max_steps = cfg.max_sequence_length
        if max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        max_steps = min(max_steps, cfg.max_sequence_length)
        batch = z.shape[0]
        device = z.device
        dims = torch.zeros(batch, 0, dtype=torch.long, device=device)
        values = torch.zeros(batch, 0, dtype=torch.float64, device=device)
        active = torch.ones(batch, dtype=torch.bool, device=device)
        emitted = torch.zeros(batch, dtype=torch.long, device=device)

        for _ in range(max_steps):
            last = self._decoder_hidden(z, dims, values)[:, -1]
            logits = self.dim_head(last)
            value_means = self.value_head(last).squeeze(-1)
            if constrained and dims.shape[1]:
                last = dims[:, -1]
                cap = torch.arange(cfg.ambient_dim, device=device)
                # Disallow any dimension <= the last emitted one; EOS stays open.
                blocked = cap.unsqueeze(0) <= last.unsqueeze(1)
                has_prev = (emitted > 0).unsqueeze(1)
                logits[:, : cfg.ambient_dim] = logits[:, : cfg.ambient_dim].masked_fill(
                    blocked & has_prev, float("-inf")
                )
            choice = logits.argmax(dim=-1)
            value = value_means.to(torch.float64)
            stopping = active & (choice == cfg.eos_index)
            emitting = active & ~stopping
            # Inactive rows keep padding tokens; their emissions are ignored below.
            dims = torch.cat([dims, choice.clamp(max=cfg.ambient_dim - 1).unsqueeze(1)], dim=1)
            values = torch.cat([values, value.unsqueeze(1)], dim=1)
            emitted = emitted + emitting.long()
            active = active & ~stopping
            if not bool(active.any()):
                break

        out: list[GeneratedSample] = []
        dims_np = dims.cpu().numpy()
        values_np = values.cpu().numpy()
        counts = emitted.cpu().numpy()
        for i in range(batch):
            n = int(counts[i])
            out.append(
                GeneratedSample(
                    ambient_dim=cfg.ambient_dim,
                    dims=dims_np[i, :n].copy(),
                    values=values_np[i, :n].copy(),
                )
            )
        return out

    # ------------------------------------------------------------------

    def reconstruct(
        self,
        samples: Sequence[SparseSample],
        *,
        constrained: bool = False,
        max_steps: Optional[int] = None,
    ) -> list[GeneratedSample]:
        """Encode deterministically and greedily decode back."""
        _, z = self.encode(samples, deterministic=True)
        return self.decode_greedy(z, constrained=constrained, max_steps=max_steps)


def _angular_rate_table(config: SavaeConfig) -> Tensor:
    half = config.d_model // 2
    exponents = torch.arange(half, dtype=torch.float64) * (2.0 / config.d_model)
    return torch.pow(torch.tensor(config.encoding_base, dtype=torch.float64), -exponents)
