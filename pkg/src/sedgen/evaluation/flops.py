"""Analytic compute and activation-memory cost models.

Counting convention: one multiply-accumulate = 2 FLOPs; only matmul work
is counted (activations, norms, and the sinusoidal encodings are ignored).
A linear layer in -> out over L tokens costs 2*in*out*L; attention per
layer at sequence length L and width d costs 2*(4*L*d^2) for the q/k/v/out
projections plus 2*(2*L^2*d) for scores and the weighted sum; the
feed-forward costs 2*(2*L*d*d_ff). Backward is 2x forward by convention.
One estimate covers one forward pass of every trainable component the
method runs per example (autoencoder stacks plus denoiser backbone), so
relative growth across ambient dimension is directly comparable between
model kinds. Activation memory is the summed output element count of the
same line items (batch 1), a proxy for the training peak.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

__all__ = [
    "DenseArch",
    "FlopsEstimate",
    "LdmArch",
    "MODEL_KINDS",
    "SedArch",
    "attention_layer_flops",
    "flops_estimate",
    "linear_flops",
    "transformer_layer_flops",
]

MODEL_KINDS = ("sed", "ddpm-dense", "ldm-dense")


def linear_flops(d_in: int, d_out: int, tokens: float = 1.0) -> float:
    """2 * in * out MACs-as-FLOPs per token."""
    return 2.0 * d_in * d_out * tokens


def attention_layer_flops(length: float, d_model: int) -> float:
    """Projections 2*(4*L*d^2) plus score/value matmuls 2*(2*L^2*d)."""
    return 2.0 * (4.0 * length * d_model * d_model) + 2.0 * (2.0 * length * length * d_model)


def transformer_layer_flops(length: float, d_model: int, d_ff: int) -> float:
    ffn = 2.0 * (2.0 * length * d_model * d_ff)
    return attention_layer_flops(length, d_model) + ffn


@dataclass(frozen=True)
class SedArch:
    """Shapes of the sparse autoencoder plus its latent denoiser."""

    d_model: int = 64
    d_ff: int = 256
    encoder_layers: int = 4
    decoder_layers: int = 4
    latent_dim: int = 16
    backbone_widths: tuple[int, ...] = (128, 64)
    time_embed_dim: int = 32
    time_hidden_dim: int = 64

    def __post_init__(self) -> None:
        object.__setattr__(self, "backbone_widths", tuple(int(w) for w in self.backbone_widths))


@dataclass(frozen=True)
class DenseArch:
    """Shapes of the input-space denoiser baseline."""

    hidden_widths: tuple[int, ...] = (256, 128)
    time_embed_dim: int = 32
    time_hidden_dim: int = 64

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))


@dataclass(frozen=True)
class LdmArch:
    """Shapes of the dense-VAE latent-diffusion baseline."""

    hidden_widths: tuple[int, ...] = (256, 128)
    latent_dim: int = 16
    backbone_widths: tuple[int, ...] = (128, 64)
    time_embed_dim: int = 32
    time_hidden_dim: int = 64

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        object.__setattr__(self, "backbone_widths", tuple(int(w) for w in self.backbone_widths))


Arch = Union[SedArch, DenseArch, LdmArch]


@dataclass(frozen=True)
class FlopsEstimate:
    kind: str
    ambient_dim: int
    mean_nonzeros: float
    forward_flops: float
    backward_flops: float
    activation_memory: float  # floats, batch 1
    components: dict[str, float]  # forward-FLOP line items

    def __post_init__(self) -> None:
        if self.forward_flops < 0 or self.backward_flops < 0 or self.activation_memory < 0:
            raise ValueError("cost estimates must be non-negative")


def _mlp_unet_costs(
    data_dim: int,
    widths: tuple[int, ...],
    time_embed_dim: int,
    time_hidden_dim: int,
    *,
    self_conditioning: bool,
) -> tuple[dict[str, float], float]:
    """Line items and activation count for one MlpUnet forward pass."""
    in_dim = data_dim * (2 if self_conditioning else 1)
    input_proj = linear_flops(in_dim, widths[0])
    hidden = sum(linear_flops(widths[i], widths[i + 1]) for i in range(len(widths) - 1))
    hidden += sum(linear_flops(widths[i + 1], widths[i]) for i in range(len(widths) - 1))
    output_proj = linear_flops(widths[0], data_dim)
    block_widths = [widths[0], *widths[1:], *reversed(widths[:-1])]
    time = (
        linear_flops(time_embed_dim, time_hidden_dim)
        + linear_flops(time_hidden_dim, time_hidden_dim)
        + sum(linear_flops(time_hidden_dim, w) for w in block_widths)
    )
    comps = {
        "input_proj": input_proj,
        "hidden": float(hidden),
        "output_proj": output_proj,
        "time": time,
    }
    memory = float(widths[0] + sum(widths[1:]) + sum(widths[:-1]) + data_dim + time_hidden_dim)
    return comps, memory


def _sed_estimate(arch: SedArch, s: int, l_mean: float) -> FlopsEstimate:
    d, d_ff = arch.d_model, arch.d_ff
    enc_len = max(l_mean, 1.0)
    dec_len = l_mean + 1.0  # start token plus one position per non-zero

    encoder = arch.encoder_layers * transformer_layer_flops(enc_len, d, d_ff)
    encoder += linear_flops(1, d, enc_len)  # value projection
    encoder += 2 * linear_flops(d, arch.latent_dim)  # mu and log-var heads

    decoder = arch.decoder_layers * transformer_layer_flops(dec_len, d, d_ff)
    decoder += linear_flops(arch.latent_dim, d)  # latent start token
    decoder += linear_flops(1, d, l_mean)  # value projection of teacher tokens
    decoder += linear_flops(d, 1, dec_len)  # value head

    # The only term that grows with the ambient dimension.
    dim_output_head = linear_flops(d, s + 1, dec_len)

    backbone, backbone_mem = _mlp_unet_costs(
        arch.latent_dim, arch.backbone_widths,
        arch.time_embed_dim, arch.time_hidden_dim, self_conditioning=True,
    )
    comps = {
        "encoder": encoder,
        "decoder": decoder,
        "dim_output_head": dim_output_head,
        "latent_backbone": sum(backbone.values()),
    }
    memory = (
        (arch.encoder_layers + arch.decoder_layers) * (enc_len * d)  # block outputs
        + 2 * arch.latent_dim
        + dec_len * (s + 1)  # categorical head logits
        + dec_len
        + backbone_mem
    )
    return _finish("sed", s, l_mean, comps, memory)


def _dense_estimate(arch: DenseArch, s: int, l_mean: float) -> FlopsEstimate:
    comps, memory = _mlp_unet_costs(
        s, arch.hidden_widths, arch.time_embed_dim, arch.time_hidden_dim,
        self_conditioning=False,
    )
    return _finish("ddpm-dense", s, l_mean, comps, memory)


def _ldm_estimate(arch: LdmArch, s: int, l_mean: float) -> FlopsEstimate:
    widths = arch.hidden_widths
    encoder = linear_flops(s, widths[0])
    encoder += sum(linear_flops(widths[i], widths[i + 1]) for i in range(len(widths) - 1))
    encoder += 2 * linear_flops(widths[-1], arch.latent_dim)
    decoder = linear_flops(arch.latent_dim, widths[-1])
    decoder += sum(linear_flops(widths[i + 1], widths[i]) for i in range(len(widths) - 1))
    decoder += linear_flops(widths[0], s)
    backbone, backbone_mem = _mlp_unet_costs(
        arch.latent_dim, arch.backbone_widths,
        arch.time_embed_dim, arch.time_hidden_dim, self_conditioning=True,
    )
    comps = {
        "encoder": encoder,
        "decoder": decoder,
        "latent_backbone": sum(backbone.values()),
    }
    memory = float(sum(widths) * 2 + 2 * arch.latent_dim + s + backbone_mem)
    return _finish("ldm-dense", s, l_mean, comps, memory)


def _finish(
    kind: str, s: int, l_mean: float, comps: dict[str, float], memory: float
) -> FlopsEstimate:
    forward = float(sum(comps.values()))
    return FlopsEstimate(
        kind=kind,
        ambient_dim=s,
        mean_nonzeros=float(l_mean),
        forward_flops=forward,
        backward_flops=2.0 * forward,
        activation_memory=float(memory),
        components=dict(comps),
    )


def flops_estimate(kind: str, arch: Arch, s: int, l_mean: float) -> FlopsEstimate:
    """Analytic cost of one model kind at ambient dimension s and mean support l."""
    if s < 1:
        raise ValueError("ambient dimension must be positive")
    if l_mean < 0 or l_mean > s:
        raise ValueError(f"l_mean must be in [0, {s}]")
    if kind == "sed":
        if not isinstance(arch, SedArch):
            raise TypeError("sed estimates need a SedArch")
        return _sed_estimate(arch, s, l_mean)
    if kind == "ddpm-dense":
        if not isinstance(arch, DenseArch):
            raise TypeError("ddpm-dense estimates need a DenseArch")
        return _dense_estimate(arch, s, l_mean)
    if kind == "ldm-dense":
        if not isinstance(arch, LdmArch):
            raise TypeError("ldm-dense estimates need an LdmArch")
        return _ldm_estimate(arch, s, l_mean)
    raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
