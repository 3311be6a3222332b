"""Sparsity statistics, distribution distances, rate-distortion, and cost models."""

from .flops import (
    MODEL_KINDS,
    DenseArch,
    FlopsEstimate,
    LdmArch,
    SedArch,
    attention_layer_flops,
    flops_estimate,
    linear_flops,
    transformer_layer_flops,
)
from .metrics import (
    MmdResult,
    SparsityHistogram,
    SpearmanResult,
    W1Result,
    mmd_rbf,
    ordering_validity_rate,
    per_dimension_means,
    sample_value_sums,
    sparsity,
    sparsity_histogram,
    spearman,
    wasserstein1,
)
from .rate_distortion import RdPoint, default_grid, rate_distortion
from .report import (
    MetricReport,
    write_flops_csv,
    write_histogram_csv,
    write_rd_csv,
    write_reports,
)

__all__ = [
    "MODEL_KINDS",
    "DenseArch",
    "FlopsEstimate",
    "LdmArch",
    "SedArch",
    "attention_layer_flops",
    "flops_estimate",
    "linear_flops",
    "transformer_layer_flops",
    "MmdResult",
    "SparsityHistogram",
    "SpearmanResult",
    "W1Result",
    "mmd_rbf",
    "ordering_validity_rate",
    "per_dimension_means",
    "sample_value_sums",
    "sparsity",
    "sparsity_histogram",
    "spearman",
    "wasserstein1",
    "RdPoint",
    "default_grid",
    "rate_distortion",
    "MetricReport",
    "write_flops_csv",
    "write_histogram_csv",
    "write_rd_csv",
    "write_reports",
]
