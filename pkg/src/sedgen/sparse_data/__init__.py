"""Sparse data representations, codecs, generators, and ingestion."""

from .codec import (
    CodecError,
    GeneratedSample,
    SparseSample,
    dataset_content_hash,
    densify,
    nze_extract,
    nze_reconstruct,
    read_generated_jsonl,
    read_samples_jsonl,
    write_generated_jsonl,
    write_manifest,
    write_samples_jsonl,
)
from .encoding import EncodingConfig, dimension_encoding, encoding_matrix
from .generators import DatasetSpec, generate_dataset
from .idx import IdxFormatError, load_idx_images
from .scaling import SCHEMES, ScaleTransform, apply_scale, invert_scale, preprocess_scale

__all__ = [
    "CodecError",
    "GeneratedSample",
    "SparseSample",
    "dataset_content_hash",
    "densify",
    "nze_extract",
    "nze_reconstruct",
    "read_generated_jsonl",
    "read_samples_jsonl",
    "write_generated_jsonl",
    "write_manifest",
    "write_samples_jsonl",
    "EncodingConfig",
    "dimension_encoding",
    "encoding_matrix",
    "DatasetSpec",
    "generate_dataset",
    "IdxFormatError",
    "load_idx_images",
    "SCHEMES",
    "ScaleTransform",
    "apply_scale",
    "invert_scale",
    "preprocess_scale",
]
