"""Run configuration: a strict, hashable JSON-backed dataclass tree.

Unknown keys are errors (fail fast on typos); every field has a default
except where noted; the content hash is computed over the canonical
sorted-key JSON form, so semantically equal files hash equally regardless
of key order. A machine-readable schema of defaults can be generated.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional, Union, get_args, get_origin, get_type_hints

from .sparse_data.generators import DatasetSpec

__all__ = ["ConfigError", "RunConfig", "config_hash", "write_schema"]


class ConfigError(ValueError):
    """Malformed run configuration (unknown key, bad type, bad value)."""


@dataclass(frozen=True)
class DatasetSection:
    """Either a JSONL path or a generator spec (kind + shape parameters)."""

    path: Optional[str] = None
    kind: Optional[str] = None
    ambient_dim: Optional[int] = None
    sample_count: int = 1000
    target_sparsity: float = 0.95
    seed: int = 0
    max_support: Optional[int] = None
    scale: str = "identity"
    holdout_fraction: float = 0.1  # validation split taken from the tail

    def __post_init__(self) -> None:
        if self.path is None and self.kind is None:
            raise ConfigError("dataset needs either a path or a generator kind")
        if self.path is not None and self.kind is not None:
            raise ConfigError("dataset path and generator kind are mutually exclusive")
        if self.kind is not None and self.ambient_dim is None:
            raise ConfigError("generated datasets need ambient_dim")
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise ConfigError("holdout_fraction must be in [0, 1)")

    def to_spec(self) -> DatasetSpec:
        if self.kind is None:
            raise ConfigError("dataset has no generator spec (path-based)")
        return DatasetSpec(
            kind=self.kind,
            ambient_dim=self.ambient_dim,
            sample_count=self.sample_count,
            target_sparsity=self.target_sparsity,
            seed=self.seed,
            max_support=self.max_support,
        )


@dataclass(frozen=True)
class SavaeSection:
    d_model: int = 64
    d_ff: int = 256
    num_heads: int = 4
    num_layers: int = 2
    dropout: float = 0.1
    beta: float = 1e-6
    latent_dim: int = 16
    max_sequence_length: int = 128
    value_variance: float = 1.0


@dataclass(frozen=True)
class SavaeTrainingSection:
    steps: int = 20000
    batch_size: int = 64
    learning_rate: float = 3e-4
    warmup_steps: int = 100
    final_lr_fraction: float = 0.1
    ema_decay: float = 0.9999


@dataclass(frozen=True)
class DiffusionSection:
    hidden_widths: tuple[int, ...] = (128, 64)
    time_embed_dim: int = 32
    time_hidden_dim: int = 64
    num_steps: int = 1000
    self_conditioning: bool = True


@dataclass(frozen=True)
class DiffusionTrainingSection:
    steps: int = 50000
    batch_size: int = 64
    learning_rate: float = 1e-4
    ema_decay: float = 0.9999


@dataclass(frozen=True)
class DenseSection:
    hidden_widths: tuple[int, ...] = (256, 128)
    num_steps: int = 1000


@dataclass(frozen=True)
class DenseVaeSection:
    hidden_widths: tuple[int, ...] = (256, 128)
    latent_dim: int = 16
    beta: float = 1e-6


@dataclass(frozen=True)
class SamplingSection:
    sampler: str = "ddim"
    count: int = 128
    max_steps: Optional[int] = None  # defaults to savae.max_sequence_length
    constrained: bool = False


@dataclass(frozen=True)
class RunConfig:
    kind: str = "sed"  # sed | ddpm-dense | ldm-dense
    seed: int = 0
    out_dir: str = "runs/out"
    dataset: DatasetSection = field(default_factory=lambda: DatasetSection(path="data.jsonl"))
    savae: SavaeSection = field(default_factory=SavaeSection)
    savae_training: SavaeTrainingSection = field(default_factory=SavaeTrainingSection)
    diffusion: DiffusionSection = field(default_factory=DiffusionSection)
    diffusion_training: DiffusionTrainingSection = field(default_factory=DiffusionTrainingSection)
    dense: DenseSection = field(default_factory=DenseSection)
    dense_vae: DenseVaeSection = field(default_factory=DenseVaeSection)
    sampling: SamplingSection = field(default_factory=SamplingSection)

    def __post_init__(self) -> None:
        if self.kind not in ("sed", "ddpm-dense", "ldm-dense"):
            raise ConfigError(f"unknown model kind {self.kind!r}")

    # ------------------------------------------------------------------

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        return _build(cls, obj, path="")

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(obj)

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))

    def to_json(self, path: str | Path) -> Path:
        path = Path(path)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")
        return path


def _plain(x: Any) -> Any:
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def _is_optional(tp: Any) -> bool:
    return get_origin(tp) is Union and type(None) in get_args(tp)


def _strip_optional(tp: Any) -> Any:
    if _is_optional(tp):
        args = [a for a in get_args(tp) if a is not type(None)]
        return args[0]
    return tp


def _coerce(tp: Any, value: Any, path: str) -> Any:
    if value is None:
        if _is_optional(tp):
            return None
        raise ConfigError(f"{path}: null is not allowed")
    tp = _strip_optional(tp)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected an object")
        return _build(tp, value, path)
    origin = get_origin(tp)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list")
        return tuple(int(v) for v in value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean, got {value!r}")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{path}: unsupported config field type {tp!r}")


def _build(cls: type, obj: dict, path: str):
    known = {f.name: f for f in fields(cls)}
    hints = get_type_hints(cls)
    unknown = set(obj) - set(known)
    if unknown:
        where = path or "config"
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}; valid keys: {sorted(known)}")
    kwargs = {}
    for name in known:
        if name in obj:
            kwargs[name] = _coerce(hints[name], obj[name], f"{path}.{name}".lstrip("."))
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def config_hash(config: RunConfig | dict) -> str:
    """SHA-256 of the canonical JSON form; stable under input key reordering."""
    obj = config.to_dict() if isinstance(config, RunConfig) else _plain(config)
    canonical = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _schema_of(cls: type) -> dict:
    out = {}
    hints = get_type_hints(cls)
    for f in fields(cls):
        hint = hints[f.name]
        tp = _strip_optional(hint)
        if dataclasses.is_dataclass(tp):
            out[f.name] = _schema_of(tp)
            continue
        if f.default is not dataclasses.MISSING:
            default = f.default
        elif f.default_factory is not dataclasses.MISSING:  # type: ignore[misc]
            default = f.default_factory()  # type: ignore[misc]
        else:
            default = None
        out[f.name] = {
            "type": getattr(tp, "__name__", str(tp)),
            "optional": _is_optional(hint),
            "default": _plain(
                dataclasses.asdict(default) if dataclasses.is_dataclass(default) else default
            ),
        }
    return out


def write_schema(path: str | Path) -> Path:
    """Document every config key, its type, and its default in one JSON file."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_schema_of(RunConfig), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path
