"""Sparse/dense codec: non-zero extraction, reconstruction, and JSON-lines IO.

A sparse sample is stored as the ambient dimensionality plus the ascending
indices of its non-zero entries and their values. Zeros are exact: the codec
tests literal equality with 0.0 and roundtrips bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "SparseSample",
    "GeneratedSample",
    "CodecError",
    "nze_extract",
    "nze_reconstruct",
    "densify",
    "write_samples_jsonl",
    "read_samples_jsonl",
    "write_generated_jsonl",
    "read_generated_jsonl",
    "dataset_content_hash",
    "write_manifest",
]


class CodecError(ValueError):
    """Raised for inputs violating the sparse-sample contract."""


@dataclass(frozen=True)
class SparseSample:
    """Non-zero dimension-value pairs of a vector in canonical ascending order.

    Invariants (checked at construction): dims strictly increasing, every
    value non-zero, all dims in [0, ambient_dim). The all-zero sample is the
    valid empty case.
    """

    ambient_dim: int
    dims: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", np.asarray(self.dims, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.ambient_dim < 1:
            raise CodecError(f"ambient_dim must be positive, got {self.ambient_dim}")
        if self.dims.ndim != 1 or self.values.ndim != 1:
            raise CodecError("dims and values must be 1-d")
        if len(self.dims) != len(self.values):
            raise CodecError(
                f"dims/values length mismatch: {len(self.dims)} vs {len(self.values)}"
            )
        if len(self.dims) > 0:
            if self.dims[0] < 0 or self.dims[-1] >= self.ambient_dim:
                raise CodecError(
                    f"dims out of range [0, {self.ambient_dim}): "
                    f"[{self.dims.min()}, {self.dims.max()}]"
                )
            if np.any(np.diff(self.dims) <= 0):
                raise CodecError("dims must be strictly increasing")
        if np.any(self.values == 0.0):
            raise CodecError("values must be non-zero")
        if not np.all(np.isfinite(self.values)):
            raise CodecError("values must be finite")

    def __len__(self) -> int:
        return len(self.dims)

    @property
    def sparsity(self) -> float:
        return (self.ambient_dim - len(self.dims)) / self.ambient_dim

    def to_dense(self) -> np.ndarray:
        return nze_reconstruct(self)


@dataclass(frozen=True)
class GeneratedSample:
    """Dimension-value pairs in generation order, before canonicalization.

    Autoregressive decoding can emit out-of-order or duplicate dims; such
    outputs are kept and flagged rather than repaired, so ordering statistics
    stay measurable. `canonical()` resolves duplicates last-write-wins and
    drops exact-zero values.
    """

    ambient_dim: int
    dims: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", np.asarray(self.dims, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if len(self.dims) != len(self.values):
            raise CodecError("dims/values length mismatch")
        if len(self.dims) > 0 and (self.dims.min() < 0 or self.dims.max() >= self.ambient_dim):
            raise CodecError("generated dims out of range")

    def __len__(self) -> int:
        return len(self.dims)

    @property
    def is_ordered(self) -> bool:
        """True when dims are strictly increasing (no duplicates)."""
        return len(self.dims) < 2 or bool(np.all(np.diff(self.dims) > 0))

    def to_dense(self) -> np.ndarray:
        """Densify with last-write-wins on duplicate dims."""
        out = np.zeros(self.ambient_dim, dtype=np.float64)
        out[self.dims] = self.values  # later assignments win
        return out

    def canonical(self) -> SparseSample:
        return nze_extract(self.to_dense())


def nze_extract(x: Sequence[float] | np.ndarray) -> SparseSample:
    """Extract the non-zero entries of a dense vector in ascending index order."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise CodecError(f"expected 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise CodecError("input contains non-finite entries")
    dims = np.flatnonzero(arr != 0.0)
    return SparseSample(ambient_dim=arr.shape[0], dims=dims, values=arr[dims])


def nze_reconstruct(sp: SparseSample) -> np.ndarray:
    """Inverse of `nze_extract`: dense vector with exact zeros off-support."""
    out = np.zeros(sp.ambient_dim, dtype=np.float64)
    out[sp.dims] = sp.values
    return out


def densify(samples: Iterable[SparseSample | GeneratedSample]) -> np.ndarray:
    """Stack a collection of samples into a dense (n, s) matrix."""
    rows = [s.to_dense() for s in samples]
    if not rows:
        raise CodecError("empty sample collection")
    return np.stack(rows)


def _sample_to_obj(sp: SparseSample) -> dict:
    return {"s": int(sp.ambient_dim), "d": [int(d) for d in sp.dims], "v": [float(v) for v in sp.values]}


def write_samples_jsonl(samples: Iterable[SparseSample], path: str | Path) -> None:
    """Write the canonical sparse interchange format, one sample per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for sp in samples:
            fh.write(json.dumps(_sample_to_obj(sp), sort_keys=True))
            fh.write("\n")


def read_samples_jsonl(path: str | Path) -> list[SparseSample]:
    """Read the sparse interchange format, rejecting invariant violations."""
    out: list[SparseSample] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                out.append(SparseSample(ambient_dim=obj["s"], dims=obj["d"], values=obj["v"]))
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise CodecError(f"{path}:{lineno}: malformed sample line: {exc}") from exc
            except CodecError as exc:
                raise CodecError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_generated_jsonl(samples: Iterable[GeneratedSample], path: str | Path) -> None:
    """Write generated samples: canonical d/v plus generation-order pairs and a validity flag.

    Every line parses as a SparseSample through its "d"/"v" fields; the raw
    generation order is preserved under "d_gen"/"v_gen".
    """
    with open(path, "w", encoding="utf-8") as fh:
        for g in samples:
            obj = _sample_to_obj(g.canonical())
            obj["d_gen"] = [int(d) for d in g.dims]
            obj["v_gen"] = [float(v) for v in g.values]
            obj["valid"] = bool(g.is_ordered)
            fh.write(json.dumps(obj, sort_keys=True))
            fh.write("\n")


def read_generated_jsonl(path: str | Path) -> list[GeneratedSample]:
    out: list[GeneratedSample] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                out.append(GeneratedSample(ambient_dim=obj["s"], dims=obj["d_gen"], values=obj["v_gen"]))
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise CodecError(f"{path}:{lineno}: malformed generated line: {exc}") from exc
    return out


def dataset_content_hash(samples: Iterable[SparseSample]) -> str:
    """SHA-256 of the canonical JSONL encoding of a sample collection."""
    h = hashlib.sha256()
    for sp in samples:
        h.update(json.dumps(_sample_to_obj(sp), sort_keys=True).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def write_manifest(path: str | Path, spec_fields: dict, seed: int, content_hash: str) -> None:
    """Dataset manifest: generator spec fields plus seed and content hash."""
    obj = {"spec": spec_fields, "seed": int(seed), "content_hash": content_hash}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")
