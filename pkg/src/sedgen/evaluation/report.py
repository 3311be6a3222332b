"""Metric report records and their CSV / JSON artifacts.

CSV artifacts are deterministic: floats are written with shortest
round-trip repr and no timestamps appear. The JSON sidecar carries the
full record including flags and an ISO timestamp, which is the one field
excluded from byte-identity guarantees.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .flops import FlopsEstimate
from .metrics import SparsityHistogram
from .rate_distortion import RdPoint

__all__ = [
    "MetricReport",
    "write_flops_csv",
    "write_histogram_csv",
    "write_rd_csv",
    "write_reports",
]


@dataclass(frozen=True)
class MetricReport:
    metric: str
    value: float
    n: int
    seed: int
    config_hash: str
    extra: dict = field(default_factory=dict)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_reports(
    reports: Sequence[MetricReport], csv_path: str | Path, *, timestamp: bool = True
) -> Path:
    """Write the metric-family CSV plus a JSON sidecar next to it."""
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value", "n", "seed", "config_hash"])
        for r in reports:
            writer.writerow([r.metric, _fmt(r.value), r.n, r.seed, r.config_hash])
    sidecar = {
        "reports": [
            {
                "metric": r.metric,
                "value": r.value,
                "n": r.n,
                "seed": r.seed,
                "config_hash": r.config_hash,
                "extra": r.extra,
            }
            for r in reports
        ],
    }
    if timestamp:
        sidecar["timestamp"] = datetime.now(timezone.utc).isoformat()
    with open(csv_path.with_suffix(csv_path.suffix + ".json"), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return csv_path


def write_rd_csv(points: Iterable[RdPoint], path: str | Path) -> Path:
    """Long-format rate-distortion CSV: one (t, series, value) row per entry."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "series", "value"])
        for p in points:
            for series in ("rate_zero", "rate_nonzero", "distortion_zero", "distortion_nonzero"):
                writer.writerow([p.t, series, _fmt(getattr(p, series))])
    return path


def write_histogram_csv(hist: SparsityHistogram, path: str | Path) -> Path:
    """Long-format histogram CSV with a trailing mean row."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "series", "value"])
        for left, right, count in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
            writer.writerow([_fmt(left), _fmt(right), "count", int(count)])
        writer.writerow([_fmt(0.0), _fmt(1.0), "mean", _fmt(hist.mean)])
    return path


def write_flops_csv(estimates: Sequence[FlopsEstimate], path: str | Path) -> Path:
    """Scaling-report CSV; the relative column rescales within each model kind."""
    path = Path(path)
    first_forward: dict[str, float] = {}
    for e in estimates:
        first_forward.setdefault(e.kind, e.forward_flops)
    component_names = sorted({name for e in estimates for name in e.components})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["kind", "ambient_dim", "mean_nonzeros", "forward_flops", "backward_flops",
             "relative_forward", "activation_memory", *component_names]
        )
        for e in estimates:
            rel = e.forward_flops / first_forward[e.kind]
            writer.writerow(
                [
                    e.kind,
                    e.ambient_dim,
                    _fmt(e.mean_nonzeros),
                    _fmt(e.forward_flops),
                    _fmt(e.backward_flops),
                    _fmt(rel),
                    _fmt(e.activation_memory),
                    *[_fmt(e.components.get(name, 0.0)) for name in component_names],
                ]
            )
    return path
