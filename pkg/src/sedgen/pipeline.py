"""End-to-end orchestration behind the command-line interface.

Each function here is pure filesystem-in/filesystem-out: load or generate
data, train, and persist checkpoints and CSV artifacts. Error taxonomy:
ConfigError for bad settings, DataError for unreadable or malformed
inputs, CompatibilityError for mismatched checkpoint pairs. Everything is
deterministic given (config, seed): global torch seeding covers weight
init and dropout, explicit generators cover data order and noise draws.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch

from .baselines.dense_diffusion import DenseDmConfig, build_dense_backbone, dense_ddpm_loss, dense_sample
from .baselines.dense_vae import DenseVae, DenseVaeConfig, train_dense_vae
from .checkpoints import (
    Checkpoint,
    CheckpointError,
    ema_arrays,
    ema_from_arrays,
    file_sha256,
    load_checkpoint,
    module_arrays,
    restore_module,
    save_checkpoint,
)
from .configs import ConfigError, RunConfig, config_hash
from .diffusion.backbone import BackboneConfig, MlpUnet
from .diffusion.sampling import SAMPLER_KINDS, eps_model_denoiser, latent_denoiser, sample
from .diffusion.schedule import NoiseSchedule
from .diffusion.training import DiffusionTrainConfig, LatentStats, compute_latent_stats, train_denoiser
from .evaluation.metrics import (
    mmd_rbf,
    ordering_validity_rate,
    per_dimension_means,
    sample_value_sums,
    sparsity_histogram,
    spearman,
    wasserstein1,
)
from .evaluation.flops import DenseArch, LdmArch, SedArch, flops_estimate
from .evaluation.rate_distortion import default_grid, rate_distortion
from .evaluation.report import (
    MetricReport,
    write_flops_csv,
    write_histogram_csv,
    write_rd_csv,
    write_reports,
)
from .savae.config import SavaeConfig
from .savae.model import SavaeModel
from .savae.training import SavaeTrainConfig, train_savae
from .sparse_data.codec import (
    CodecError,
    GeneratedSample,
    SparseSample,
    dataset_content_hash,
    densify,
    nze_extract,
    read_generated_jsonl,
    read_samples_jsonl,
    write_generated_jsonl,
    write_manifest,
    write_samples_jsonl,
)
from .sparse_data.generators import generate_dataset
from .sparse_data.idx import load_idx_images
from .sparse_data.scaling import ScaleTransform, apply_scale, invert_scale, preprocess_scale

__all__ = [
    "CompatibilityError",
    "DataError",
    "METRIC_NAMES",
    "cmd_eval",
    "cmd_rd_curve",
    "cmd_sample",
    "cmd_scaling_report",
    "cmd_train_dense",
    "cmd_train_diffusion",
    "cmd_train_savae",
]

log = logging.getLogger("sedgen")

METRIC_NAMES = ("sparsity", "w1", "mmd", "scc", "validity")

_IDX_IMAGE_MAGIC = b"\x00\x00\x08\x03"


class DataError(RuntimeError):
    """Missing or malformed input data."""


class CompatibilityError(RuntimeError):
    """Checkpoint pair whose embedded hashes do not match."""


# ----------------------------------------------------------------------
# data loading


def _read_any(path: Path) -> list[SparseSample]:
    if not path.exists():
        raise DataError(f"dataset path does not exist: {path}")
    try:
        with open(path, "rb") as fh:
            magic = fh.read(4)
        if magic == _IDX_IMAGE_MAGIC:
            return [nze_extract(vec) for vec in load_idx_images(path)]
        return read_samples_jsonl(path)
    except (CodecError, OSError, ValueError) as exc:
        raise DataError(f"cannot load dataset {path}: {exc}") from exc


@dataclass(frozen=True)
class LoadedData:
    raw: list[SparseSample]  # original value scale, full set
    train: list[SparseSample]  # scaled
    val: list[SparseSample]  # scaled
    transform: ScaleTransform
    content_hash: str


def load_dataset(config: RunConfig) -> LoadedData:
    section = config.dataset
    if section.path is not None:
        samples = _read_any(Path(section.path))
    else:
        samples = generate_dataset(section.to_spec())
    if not samples:
        raise DataError("dataset is empty")
    content = dataset_content_hash(samples)
    scaled, transform = preprocess_scale(samples, section.scale)
    n_val = int(len(scaled) * section.holdout_fraction)
    train, val = (scaled[:-n_val], scaled[-n_val:]) if n_val else (scaled, [])
    return LoadedData(raw=samples, train=train, val=val, transform=transform, content_hash=content)


def _persist_generated_dataset(config: RunConfig, data: LoadedData, out_dir: Path) -> list[Path]:
    """Write the generated dataset (original scale) next to the run artifacts."""
    if config.dataset.path is not None:
        return []
    data_path = out_dir / "dataset.jsonl"
    manifest_path = out_dir / "dataset_manifest.json"
    write_samples_jsonl(data.raw, data_path)
    write_manifest(
        manifest_path,
        config.dataset.to_spec().fields(),
        config.dataset.seed,
        data.content_hash,
    )
    return [data_path, manifest_path]


def _require_same_ambient(samples: Sequence[SparseSample]) -> int:
    dims = {s.ambient_dim for s in samples}
    if len(dims) != 1:
        raise DataError(f"dataset mixes ambient dimensions: {sorted(dims)}")
    return dims.pop()


def _write_history_csv(history: Sequence[dict], fieldnames: Sequence[str], path: Path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in history:
            writer.writerow([_csv_num(row[name]) for name in fieldnames])
    return path


def _csv_num(x: float) -> str:
    f = float(x)
    return str(int(f)) if f.is_integer() and abs(f) < 1e15 else repr(f)


def _transform_dict(t: ScaleTransform) -> dict:
    return {"scheme": t.scheme, "scale": t.scale}


def _transform_from(obj: dict) -> ScaleTransform:
    return ScaleTransform(scheme=obj["scheme"], scale=float(obj["scale"]))


def _log_progress(tag: str):
    def fn(step: int, loss) -> None:
        value = loss if isinstance(loss, float) else float(loss.total.detach())
        log.info("%s step %d loss %.6f", tag, step, value)

    return fn


# ----------------------------------------------------------------------
# training commands


def cmd_train_savae(config: RunConfig, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(config.seed)
    data = load_dataset(config)
    extra_paths = _persist_generated_dataset(config, data, out_dir)
    train, transform, content = data.train, data.transform, data.content_hash
    ambient = _require_same_ambient(train)
    max_len = max((len(s) for s in train), default=0)
    sv = config.savae
    if max_len > sv.max_sequence_length:
        raise ConfigError(
            f"savae.max_sequence_length={sv.max_sequence_length} is below the "
            f"longest training sample ({max_len} non-zeros)"
        )
    model_config = SavaeConfig(
        ambient_dim=ambient,
        d_model=sv.d_model,
        d_ff=sv.d_ff,
        num_heads=sv.num_heads,
        num_layers=sv.num_layers,
        dropout=sv.dropout,
        beta=sv.beta,
        latent_dim=sv.latent_dim,
        max_sequence_length=sv.max_sequence_length,
        value_variance=sv.value_variance,
    )
    model = SavaeModel(model_config)
    tr = config.savae_training
    train_config = SavaeTrainConfig(
        steps=tr.steps,
        batch_size=tr.batch_size,
        learning_rate=tr.learning_rate,
        warmup_steps=tr.warmup_steps,
        final_lr_fraction=tr.final_lr_fraction,
        ema_decay=tr.ema_decay,
        seed=config.seed,
    )
    log.info("training savae: %d steps on %d samples (ambient %d)", tr.steps, len(train), ambient)
    ema, history = train_savae(model, train, train_config, log_every=500, log_fn=_log_progress("savae"))

    ckpt_path = out_dir / "savae.ckpt"
    save_checkpoint(
        Checkpoint(
            kind="savae",
            config=config.to_dict(),
            step=tr.steps,
            arrays={**module_arrays(model), **ema_arrays(ema)},
            extra={
                "ambient_dim": ambient,
                "dataset_hash": content,
                "scale": _transform_dict(transform),
            },
        ),
        ckpt_path,
    )
    curve_path = _write_history_csv(
        history, ["step", "lr", "dim_nll", "value_mse", "kl", "total"], out_dir / "savae_loss.csv"
    )
    return [ckpt_path, curve_path, *extra_paths]


def _rebuild_savae(ckpt: Checkpoint, *, use_ema: bool) -> SavaeModel:
    cfg = RunConfig.from_dict(ckpt.config)
    sv = cfg.savae
    model_config = SavaeConfig(
        ambient_dim=int(ckpt.extra["ambient_dim"]),
        d_model=sv.d_model,
        d_ff=sv.d_ff,
        num_heads=sv.num_heads,
        num_layers=sv.num_layers,
        dropout=sv.dropout,
        beta=sv.beta,
        latent_dim=sv.latent_dim,
        max_sequence_length=sv.max_sequence_length,
        value_variance=sv.value_variance,
    )
    model = SavaeModel(model_config)
    restore_module(model, ckpt.arrays, prefix="model.")
    if use_ema:
        ema = ema_from_arrays(model, ckpt.arrays, decay=1.0)
        ema.copy_to(model)
    model.eval()
    return model


def _encode_means(model: SavaeModel, samples: Sequence[SparseSample], batch: int = 256) -> torch.Tensor:
    chunks = []
    with torch.no_grad():
        for i in range(0, len(samples), batch):
            posterior, _ = model.encode(samples[i : i + batch], deterministic=True)
            chunks.append(posterior.mu)
    return torch.cat(chunks)


def cmd_train_diffusion(config: RunConfig, savae_ckpt: Path, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(config.seed)
    if not savae_ckpt.exists():
        raise DataError(f"savae checkpoint does not exist: {savae_ckpt}")
    ckpt = load_checkpoint(savae_ckpt)
    if ckpt.kind != "savae":
        raise CompatibilityError(f"expected a savae checkpoint, got kind {ckpt.kind!r}")
    # Encode with the EMA weights: the same weights decode at sampling time,
    # so the denoiser must be trained in that latent space.
    savae = _rebuild_savae(ckpt, use_ema=True)
    for p in savae.parameters():
        p.requires_grad_(False)

    data = load_dataset(config)
    train, transform = data.train, data.transform
    log.info("encoding %d samples to %d-d latents", len(train), savae.config.latent_dim)
    latents = _encode_means(savae, train)
    stats = compute_latent_stats(latents)
    z0 = stats.standardize(latents).to(torch.float32)

    df = config.diffusion
    backbone = MlpUnet(
        BackboneConfig(
            data_dim=savae.config.latent_dim,
            hidden_widths=df.hidden_widths,
            time_embed_dim=df.time_embed_dim,
            time_hidden_dim=df.time_hidden_dim,
            self_conditioning=df.self_conditioning,
        )
    )
    schedule = NoiseSchedule.cosine(df.num_steps)
    tr = config.diffusion_training
    train_config = DiffusionTrainConfig(
        steps=tr.steps,
        batch_size=tr.batch_size,
        learning_rate=tr.learning_rate,
        ema_decay=tr.ema_decay,
        seed=config.seed,
    )
    log.info("training latent denoiser: %d steps", tr.steps)
    ema, history = train_denoiser(
        backbone, z0, schedule, train_config, log_every=1000, log_fn=_log_progress("diffusion")
    )

    ckpt_path = out_dir / "sed-diffusion.ckpt"
    save_checkpoint(
        Checkpoint(
            kind="sed-diffusion",
            config=config.to_dict(),
            step=tr.steps,
            arrays={**module_arrays(backbone), **ema_arrays(ema)},
            extra={
                "ambient_dim": savae.config.ambient_dim,
                "savae_sha256": file_sha256(savae_ckpt),
                "latent_mean": [float(v) for v in stats.mean],
                "latent_std": [float(v) for v in stats.std],
                "scale": _transform_dict(transform),
            },
        ),
        ckpt_path,
    )
    curve_path = _write_history_csv(history, ["step", "lr", "loss"], out_dir / "diffusion_loss.csv")
    return [ckpt_path, curve_path]


def cmd_train_dense(config: RunConfig, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(config.seed)
    data = load_dataset(config)
    extra_paths = _persist_generated_dataset(config, data, out_dir)
    train, transform = data.train, data.transform
    ambient = _require_same_ambient(train)
    dense = torch.from_numpy(densify(train)).to(torch.float32)

    if config.kind == "ddpm-dense":
        dm = DenseDmConfig(
            ambient_dim=ambient,
            hidden_widths=config.dense.hidden_widths,
            num_steps=config.dense.num_steps,
        )
        model = build_dense_backbone(dm)
        schedule = NoiseSchedule.cosine(dm.num_steps)
        tr = config.diffusion_training
        train_config = DiffusionTrainConfig(
            steps=tr.steps, batch_size=tr.batch_size,
            learning_rate=tr.learning_rate, ema_decay=tr.ema_decay, seed=config.seed,
        )
        log.info("training dense denoiser: %d steps on %d samples", tr.steps, len(train))
        ema, history = train_denoiser(
            model, dense, schedule, train_config,
            loss_fn=dense_ddpm_loss, log_every=1000, log_fn=_log_progress("dense"),
        )
        ckpt_path = out_dir / "ddpm-dense.ckpt"
        save_checkpoint(
            Checkpoint(
                kind="ddpm-dense",
                config=config.to_dict(),
                step=tr.steps,
                arrays={**module_arrays(model), **ema_arrays(ema)},
                extra={"ambient_dim": ambient, "scale": _transform_dict(transform)},
            ),
            ckpt_path,
        )
        curve_path = _write_history_csv(history, ["step", "lr", "loss"], out_dir / "dense_loss.csv")
        return [ckpt_path, curve_path, *extra_paths]

    if config.kind != "ldm-dense":
        raise ConfigError(f"train-dense supports kinds ddpm-dense/ldm-dense, got {config.kind!r}")

    vae_config = DenseVaeConfig(
        ambient_dim=ambient,
        hidden_widths=config.dense_vae.hidden_widths,
        latent_dim=config.dense_vae.latent_dim,
        beta=config.dense_vae.beta,
    )
    vae = DenseVae(vae_config)
    sv_tr = config.savae_training
    vae_train = SavaeTrainConfig(
        steps=sv_tr.steps, batch_size=sv_tr.batch_size, learning_rate=sv_tr.learning_rate,
        warmup_steps=sv_tr.warmup_steps, final_lr_fraction=sv_tr.final_lr_fraction,
        ema_decay=sv_tr.ema_decay, seed=config.seed,
    )
    log.info("training dense vae: %d steps", sv_tr.steps)
    vae_ema, vae_history = train_dense_vae(vae, dense, vae_train)
    vae_path = out_dir / "ldm-vae.ckpt"
    save_checkpoint(
        Checkpoint(
            kind="ldm-vae",
            config=config.to_dict(),
            step=sv_tr.steps,
            arrays={**module_arrays(vae), **ema_arrays(vae_ema)},
            extra={"ambient_dim": ambient, "scale": _transform_dict(transform)},
        ),
        vae_path,
    )
    vae_curve = _write_history_csv(
        vae_history, ["step", "lr", "recon_mse", "kl", "total"], out_dir / "ldm_vae_loss.csv"
    )

    vae_ema.copy_to(vae)  # sample-time weights define the latent space
    vae.eval()
    with torch.no_grad():
        posterior, _ = vae.encode(dense, deterministic=True)
    stats = compute_latent_stats(posterior.mu)
    z0 = stats.standardize(posterior.mu).to(torch.float32)

    df = config.diffusion
    backbone = MlpUnet(
        BackboneConfig(
            data_dim=vae_config.latent_dim,
            hidden_widths=df.hidden_widths,
            time_embed_dim=df.time_embed_dim,
            time_hidden_dim=df.time_hidden_dim,
            self_conditioning=df.self_conditioning,
        )
    )
    schedule = NoiseSchedule.cosine(df.num_steps)
    tr = config.diffusion_training
    train_config = DiffusionTrainConfig(
        steps=tr.steps, batch_size=tr.batch_size,
        learning_rate=tr.learning_rate, ema_decay=tr.ema_decay, seed=config.seed,
    )
    log.info("training ldm latent denoiser: %d steps", tr.steps)
    ema, history = train_denoiser(
        backbone, z0, schedule, train_config, log_every=1000, log_fn=_log_progress("ldm")
    )
    ckpt_path = out_dir / "ldm-diffusion.ckpt"
    save_checkpoint(
        Checkpoint(
            kind="ldm-diffusion",
            config=config.to_dict(),
            step=tr.steps,
            arrays={
                **module_arrays(backbone),
                **ema_arrays(ema),
                **{f"vae.{k}": v for k, v in module_arrays(vae, prefix="").items()},
            },
            extra={
                "ambient_dim": ambient,
                "vae_sha256": file_sha256(vae_path),
                "latent_mean": [float(v) for v in stats.mean],
                "latent_std": [float(v) for v in stats.std],
                "scale": _transform_dict(transform),
            },
        ),
        ckpt_path,
    )
    curve_path = _write_history_csv(history, ["step", "lr", "loss"], out_dir / "ldm_diffusion_loss.csv")
    return [vae_path, vae_curve, ckpt_path, curve_path, *extra_paths]


# ----------------------------------------------------------------------
# sampling


def _stats_from_extra(extra: dict) -> LatentStats:
    return LatentStats(
        mean=np.asarray(extra["latent_mean"], dtype=np.float64),
        std=np.asarray(extra["latent_std"], dtype=np.float64),
    )


def _rebuild_backbone(ckpt: Checkpoint, data_dim: int) -> tuple[MlpUnet, NoiseSchedule]:
    cfg = RunConfig.from_dict(ckpt.config)
    df = cfg.diffusion
    if ckpt.kind == "ddpm-dense":
        backbone = build_dense_backbone(
            DenseDmConfig(
                ambient_dim=data_dim,
                hidden_widths=cfg.dense.hidden_widths,
                num_steps=cfg.dense.num_steps,
            )
        )
        schedule = NoiseSchedule.cosine(cfg.dense.num_steps)
    else:
        backbone = MlpUnet(
            BackboneConfig(
                data_dim=data_dim,
                hidden_widths=df.hidden_widths,
                time_embed_dim=df.time_embed_dim,
                time_hidden_dim=df.time_hidden_dim,
                self_conditioning=df.self_conditioning,
            )
        )
        schedule = NoiseSchedule.cosine(df.num_steps)
    ema = ema_from_arrays(backbone, ckpt.arrays, decay=1.0)
    ema.copy_to(backbone)
    backbone.eval()
    return backbone, schedule


def _invert_generated(samples: list[GeneratedSample], transform: ScaleTransform) -> list[GeneratedSample]:
    if transform.scheme == "identity":
        return samples
    out = []
    for g in samples:
        (values,) = invert_scale([g.values], transform)
        out.append(GeneratedSample(ambient_dim=g.ambient_dim, dims=g.dims, values=values))
    return out


def _write_dense_csv(matrix: np.ndarray, path: Path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for row in np.atleast_2d(matrix):
            writer.writerow([repr(float(v)) for v in row])
    return path


def cmd_sample(
    ckpt_path: Path,
    out_dir: Path,
    *,
    savae_ckpt: Optional[Path] = None,
    sampler: Optional[str] = None,
    count: Optional[int] = None,
    seed: int = 0,
) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    if not ckpt_path.exists():
        raise DataError(f"checkpoint does not exist: {ckpt_path}")
    ckpt = load_checkpoint(ckpt_path)
    cfg = RunConfig.from_dict(ckpt.config)
    kind = ckpt.kind
    sampler = sampler or cfg.sampling.sampler
    if sampler not in SAMPLER_KINDS:
        raise ConfigError(f"unknown sampler {sampler!r}; expected one of {SAMPLER_KINDS}")
    n = cfg.sampling.count if count is None else count
    if n < 0:
        raise ConfigError("sample count must be >= 0")
    generator = torch.Generator().manual_seed(seed)
    transform = _transform_from(ckpt.extra["scale"])

    if kind == "sed-diffusion":
        if savae_ckpt is None:
            raise ConfigError("sampling a sed-diffusion checkpoint requires --savae-ckpt")
        if not savae_ckpt.exists():
            raise DataError(f"savae checkpoint does not exist: {savae_ckpt}")
        actual = file_sha256(savae_ckpt)
        expected = ckpt.extra["savae_sha256"]
        if actual != expected:
            raise CompatibilityError(
                f"savae checkpoint hash mismatch: diffusion checkpoint was trained "
                f"against {expected[:12]}..., got {actual[:12]}..."
            )
        savae = _rebuild_savae(load_checkpoint(savae_ckpt), use_ema=True)
        out_path = out_dir / "samples.jsonl"
        if n == 0:
            write_generated_jsonl([], out_path)
            return [out_path]
        backbone, schedule = _rebuild_backbone(ckpt, savae.config.latent_dim)
        z = sample(
            latent_denoiser(backbone, schedule), schedule, n, savae.config.latent_dim,
            kind=sampler, generator=generator,
        )
        z = _stats_from_extra(ckpt.extra).destandardize(z)
        max_steps = cfg.sampling.max_steps or savae.config.max_sequence_length
        generated = savae.decode_greedy(
            z.to(torch.float32), max_steps=max_steps, constrained=cfg.sampling.constrained
        )
        write_generated_jsonl(_invert_generated(generated, transform), out_path)
        return [out_path]

    out_path = out_dir / "samples.csv"
    ambient = int(ckpt.extra["ambient_dim"])
    if kind == "ddpm-dense":
        if n == 0:
            out_path.write_text("", encoding="utf-8")
            return [out_path]
        backbone, schedule = _rebuild_backbone(ckpt, ambient)
        x = dense_sample(backbone, schedule, n, kind=sampler, generator=generator)
        (x_np,) = invert_scale([x.numpy().astype(np.float64)], transform)
        return [_write_dense_csv(x_np, out_path)]

    if kind == "ldm-diffusion":
        if n == 0:
            out_path.write_text("", encoding="utf-8")
            return [out_path]
        vae = DenseVae(
            DenseVaeConfig(
                ambient_dim=ambient,
                hidden_widths=cfg.dense_vae.hidden_widths,
                latent_dim=cfg.dense_vae.latent_dim,
                beta=cfg.dense_vae.beta,
            )
        )
        restore_module(vae, ckpt.arrays, prefix="vae.")
        vae.eval()
        backbone, schedule = _rebuild_backbone(ckpt, cfg.dense_vae.latent_dim)
        z = sample(
            latent_denoiser(backbone, schedule), schedule, n, cfg.dense_vae.latent_dim,
            kind=sampler, generator=generator,
        )
        z = _stats_from_extra(ckpt.extra).destandardize(z).to(torch.float32)
        with torch.no_grad():
            x = vae.decode(z)
        (x_np,) = invert_scale([x.numpy().astype(np.float64)], transform)
        return [_write_dense_csv(x_np, out_path)]

    raise ConfigError(f"cannot sample from checkpoint kind {kind!r}")


# ----------------------------------------------------------------------
# evaluation


def _load_real(path: Path) -> list[SparseSample]:
    if not path.exists():
        raise DataError(f"file does not exist: {path}")
    try:
        return read_samples_jsonl(path)
    except CodecError as exc:
        raise DataError(str(exc)) from exc


def _load_generated(path: Path) -> tuple[np.ndarray, Optional[list[GeneratedSample]]]:
    """Dense matrix plus generation-order samples when the file carries them."""
    if not path.exists():
        raise DataError(f"file does not exist: {path}")
    if path.suffix == ".csv":
        try:
            rows = [
                [float(v) for v in line.split(",")]
                for line in path.read_text(encoding="utf-8").splitlines()
                if line.strip()
            ]
        except ValueError as exc:
            raise DataError(f"cannot parse dense CSV {path}: {exc}") from exc
        if not rows:
            raise DataError(f"empty generated file: {path}")
        try:
            return np.asarray(rows, dtype=np.float64), None
        except ValueError as exc:
            raise DataError(f"ragged dense CSV {path}: {exc}") from exc
    try:
        first_line = ""
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    first_line = line
                    break
        if not first_line:
            raise DataError(f"empty generated file: {path}")
        if "d_gen" in json.loads(first_line):
            generated = read_generated_jsonl(path)
            return densify(generated), generated
        return densify(read_samples_jsonl(path)), None
    except (CodecError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc


def cmd_eval(
    real_path: Path,
    gen_path: Path,
    out_dir: Path,
    *,
    metrics: Optional[Sequence[str]] = None,
    seed: int = 0,
) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    real = _load_real(real_path)
    real_mat = densify(real)
    gen_mat, generated = _load_generated(gen_path)
    if real_mat.shape[1] != gen_mat.shape[1]:
        raise DataError(
            f"ambient dimension mismatch: real {real_mat.shape[1]} vs generated {gen_mat.shape[1]}"
        )
    if metrics is None:
        names = ["sparsity", "w1", "mmd", "scc"] + (["validity"] if generated is not None else [])
    else:
        names = list(metrics)
        unknown = [m for m in names if m not in METRIC_NAMES]
        if unknown:
            raise ConfigError(
                f"unknown metrics {unknown}; valid names: {list(METRIC_NAMES)}"
            )
        if "validity" in names and generated is None:
            raise ConfigError(
                "validity needs generation-order samples (JSON-lines with d_gen), "
                "got a dense matrix"
            )

    chash = config_hash(
        {"real": str(real_path), "generated": str(gen_path), "metrics": names, "seed": seed}
    )
    reports: list[MetricReport] = []
    paths: list[Path] = []

    if "sparsity" in names:
        hist_real = sparsity_histogram(real_mat)
        hist_gen = sparsity_histogram(gen_mat)
        paths.append(write_histogram_csv(hist_real, out_dir / "sparsity_real.csv"))
        paths.append(write_histogram_csv(hist_gen, out_dir / "sparsity_generated.csv"))
        reports.append(MetricReport("sparsity_mean_real", hist_real.mean, len(real), seed, chash))
        reports.append(
            MetricReport("sparsity_mean_generated", hist_gen.mean, gen_mat.shape[0], seed, chash)
        )
    if "w1" in names:
        w1 = wasserstein1(sample_value_sums(real_mat), sample_value_sums(gen_mat), seed=seed)
        reports.append(MetricReport("w1_value_sum", w1.raw, w1.n, seed, chash))
        reports.append(
            MetricReport(
                "w1_value_sum_normalized", w1.normalized, w1.n, seed, chash,
                extra={"degenerate_scale": w1.degenerate_scale},
            )
        )
    if "mmd" in names:
        m = mmd_rbf(real_mat, gen_mat)
        reports.append(
            MetricReport(
                "mmd_rbf", m.mmd, min(real_mat.shape[0], gen_mat.shape[0]), seed, chash,
                extra={"bandwidth": m.bandwidth, "bandwidth_fallback": m.bandwidth_fallback},
            )
        )
    if "scc" in names:
        sc = spearman(per_dimension_means(real_mat), per_dimension_means(gen_mat))
        reports.append(
            MetricReport(
                "scc_dimension_means", sc.value, real_mat.shape[1], seed, chash,
                extra={"constant_input": sc.constant_input},
            )
        )
    if "validity" in names:
        assert generated is not None
        reports.append(
            MetricReport("ordering_validity", ordering_validity_rate(generated),
                         len(generated), seed, chash)
        )

    paths.insert(0, write_reports(reports, out_dir / "metrics.csv"))
    return paths


def cmd_rd_curve(
    ckpt_path: Path,
    data_path: Path,
    out_dir: Path,
    *,
    grid: Optional[Sequence[int]] = None,
    grid_points: int = 50,
    mc_samples: int = 16,
    max_samples: Optional[int] = None,
    seed: int = 0,
) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    if not ckpt_path.exists():
        raise DataError(f"checkpoint does not exist: {ckpt_path}")
    ckpt = load_checkpoint(ckpt_path)
    if ckpt.kind != "ddpm-dense":
        raise ConfigError(
            f"rate-distortion needs an input-space (ddpm-dense) checkpoint, got {ckpt.kind!r}"
        )
    samples = _load_real(data_path)
    transform = _transform_from(ckpt.extra["scale"])
    scaled = apply_scale(samples, transform)
    if max_samples is not None:
        scaled = scaled[:max_samples]
    x0 = torch.from_numpy(densify(scaled)).to(torch.float32)
    backbone, schedule = _rebuild_backbone(ckpt, int(ckpt.extra["ambient_dim"]))
    if x0.shape[1] != backbone.config.data_dim:
        raise DataError(
            f"data dimension {x0.shape[1]} != model dimension {backbone.config.data_dim}"
        )
    if grid is None:
        grid = default_grid(schedule.num_steps, grid_points)
    for t in grid:
        if not 0 <= int(t) <= schedule.num_steps:
            raise ConfigError(f"grid timestep {t} outside [0, {schedule.num_steps}]")
    generator = torch.Generator().manual_seed(seed)
    points = rate_distortion(
        eps_model_denoiser(backbone, schedule), schedule, x0,
        grid=[int(t) for t in grid], mc_samples=mc_samples, generator=generator,
    )
    return [write_rd_csv(points, out_dir / "rd_curve.csv")]


def cmd_scaling_report(
    out_dir: Path,
    *,
    dims: Sequence[int],
    l_mean: float,
    config: Optional[RunConfig] = None,
) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    dims = [int(s) for s in dims]
    if not dims:
        raise ConfigError("at least one ambient dimension is required")
    if sorted(dims) != dims:
        raise ConfigError("ambient dimensions must be ascending")
    if config is None:
        sed_arch, dense_arch, ldm_arch = SedArch(), DenseArch(), LdmArch()
    else:
        sed_arch = SedArch(
            d_model=config.savae.d_model,
            d_ff=config.savae.d_ff,
            encoder_layers=config.savae.num_layers,
            decoder_layers=config.savae.num_layers,
            latent_dim=config.savae.latent_dim,
            backbone_widths=config.diffusion.hidden_widths,
            time_embed_dim=config.diffusion.time_embed_dim,
            time_hidden_dim=config.diffusion.time_hidden_dim,
        )
        dense_arch = DenseArch(
            hidden_widths=config.dense.hidden_widths,
            time_embed_dim=config.diffusion.time_embed_dim,
            time_hidden_dim=config.diffusion.time_hidden_dim,
        )
        ldm_arch = LdmArch(
            hidden_widths=config.dense_vae.hidden_widths,
            latent_dim=config.dense_vae.latent_dim,
            backbone_widths=config.diffusion.hidden_widths,
            time_embed_dim=config.diffusion.time_embed_dim,
            time_hidden_dim=config.diffusion.time_hidden_dim,
        )
    estimates = []
    for kind, arch in (("sed", sed_arch), ("ddpm-dense", dense_arch), ("ldm-dense", ldm_arch)):
        for s in dims:
            estimates.append(flops_estimate(kind, arch, s, min(l_mean, s)))
    return [write_flops_csv(estimates, out_dir / "scaling_report.csv")]
