"""Versioned binary checkpoints with embedded config and content hash.

Layout: an 8-byte magic, an 8-byte big-endian header length, a JSON header
(sorted keys) describing kind, config, step, extra metadata, and the array
manifest, then the raw little-endian array blobs in manifest order. The
header stores a SHA-256 of the blob section; loading verifies it, and
save -> load -> save is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .diffusion.ema import EmaState

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "MODEL_KINDS",
    "ema_arrays",
    "ema_from_arrays",
    "file_sha256",
    "load_checkpoint",
    "module_arrays",
    "restore_module",
    "save_checkpoint",
]

_MAGIC = b"SEDCKPT1"
_VERSION = 1

MODEL_KINDS = ("savae", "sed-diffusion", "ddpm-dense", "ldm-vae", "ldm-diffusion")


class CheckpointError(RuntimeError):
    """Malformed, corrupt, or incompatible checkpoint file."""


@dataclass
class Checkpoint:
    kind: str
    config: dict
    step: int
    arrays: dict[str, np.ndarray]
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise CheckpointError(
                f"unknown checkpoint kind {self.kind!r}; expected one of {MODEL_KINDS}"
            )


def _canonical_arrays(arrays: dict[str, np.ndarray]) -> list[tuple[str, np.ndarray]]:
    out = []
    for name in sorted(arrays):
        # np.ascontiguousarray would promote 0-d arrays to shape (1,).
        arr = np.asarray(arrays[name], order="C")
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        out.append((name, arr))
    return out


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> Path:
    path = Path(path)
    items = _canonical_arrays(ckpt.arrays)
    blob_hash = hashlib.sha256()
    manifest = []
    for name, arr in items:
        blob_hash.update(arr.tobytes())
        manifest.append(
            {"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape)}
        )
    header = {
        "version": _VERSION,
        "kind": ckpt.kind,
        "config": ckpt.config,
        "step": int(ckpt.step),
        "arrays": manifest,
        "blob_sha256": blob_hash.hexdigest(),
        "extra": ckpt.extra,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(len(header_bytes).to_bytes(8, "big"))
        fh.write(header_bytes)
        for _, arr in items:
            fh.write(arr.tobytes())
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(raw) < len(_MAGIC) + 8 or raw[: len(_MAGIC)] != _MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    offset = len(_MAGIC)
    header_len = int.from_bytes(raw[offset : offset + 8], "big")
    offset += 8
    try:
        header = json.loads(raw[offset : offset + header_len])
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: corrupt header: {exc}") from exc
    offset += header_len
    if header.get("version") != _VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {header.get('version')!r}"
        )
    arrays: dict[str, np.ndarray] = {}
    blob_hash = hashlib.sha256()
    for entry in header["arrays"]:
        dtype = np.dtype(entry["dtype"])
        shape = tuple(entry["shape"])
        nbytes = int(dtype.itemsize * np.prod(shape, dtype=np.int64)) if shape else dtype.itemsize
        chunk = raw[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise CheckpointError(f"{path}: truncated blob for array {entry['name']!r}")
        blob_hash.update(chunk)
        arrays[entry["name"]] = np.frombuffer(chunk, dtype=dtype).reshape(shape).copy()
        offset += nbytes
    if blob_hash.hexdigest() != header["blob_sha256"]:
        raise CheckpointError(f"{path}: blob hash mismatch (corrupt file)")
    return Checkpoint(
        kind=header["kind"],
        config=header["config"],
        step=header["step"],
        arrays=arrays,
        extra=header.get("extra", {}),
    )


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ----------------------------------------------------------------------
# torch glue


def module_arrays(module: nn.Module, prefix: str = "model.") -> dict[str, np.ndarray]:
    return {
        prefix + name: tensor.detach().cpu().numpy()
        for name, tensor in module.state_dict().items()
    }


def restore_module(module: nn.Module, arrays: dict[str, np.ndarray], prefix: str = "model.") -> None:
    state = {}
    for name, tensor in module.state_dict().items():
        key = prefix + name
        if key not in arrays:
            raise CheckpointError(f"checkpoint missing array {key!r}")
        arr = arrays[key]
        if tuple(arr.shape) != tuple(tensor.shape):
            raise CheckpointError(
                f"shape mismatch for {key!r}: checkpoint {tuple(arr.shape)} vs model {tuple(tensor.shape)}"
            )
        state[name] = torch.from_numpy(arr).to(tensor.dtype)
    module.load_state_dict(state)


def ema_arrays(ema: EmaState, prefix: str = "ema.") -> dict[str, np.ndarray]:
    return {prefix + name: t.detach().cpu().numpy() for name, t in ema.shadow.items()}


def ema_from_arrays(
    module: nn.Module, arrays: dict[str, np.ndarray], decay: float, prefix: str = "ema."
) -> EmaState:
    shadow = {}
    for name, param in module.named_parameters():
        key = prefix + name
        if key not in arrays:
            raise CheckpointError(f"checkpoint missing EMA array {key!r}")
        shadow[name] = torch.from_numpy(arrays[key].copy()).to(param.dtype)
    return EmaState(shadow, decay=decay)
