"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 configuration error, 3 data
error, 4 checkpoint-compatibility error. Stdout carries only the paths of
produced artifacts (one per line); all human-readable logging goes to
stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import pipeline
from .checkpoints import CheckpointError
from .configs import ConfigError, RunConfig, write_schema
from .pipeline import CompatibilityError, DataError
from .sparse_data.codec import CodecError

__all__ = ["main"]

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INCOMPATIBLE = 4


def _add_common(parser: argparse.ArgumentParser, *, config_required: bool) -> None:
    parser.add_argument("--config", type=Path, required=config_required,
                        help="run configuration JSON")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out", type=Path, default=None,
                        help="override the config output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sedgen",
        description="Sparse generative modeling: two-stage training, sampling, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-savae", help="train the sparse autoencoder")
    _add_common(p, config_required=True)

    p = sub.add_parser("train-diffusion", help="train the latent denoiser on a frozen autoencoder")
    _add_common(p, config_required=True)
    p.add_argument("--savae-ckpt", type=Path, required=True)

    p = sub.add_parser("train-dense", help="train a dense baseline (ddpm-dense or ldm-dense)")
    _add_common(p, config_required=True)

    p = sub.add_parser("sample", help="draw samples from a trained checkpoint")
    p.add_argument("--ckpt", type=Path, required=True)
    p.add_argument("--savae-ckpt", type=Path, default=None,
                   help="paired autoencoder checkpoint (sed-diffusion only)")
    p.add_argument("--sampler", choices=("ddpm", "ddim"), default=None)
    p.add_argument("--n", type=int, default=None, help="number of samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("eval", help="compare a real set against a generated set")
    p.add_argument("--real", type=Path, required=True, help="real samples (JSON-lines)")
    p.add_argument("--generated", type=Path, required=True,
                   help="generated samples (JSON-lines or dense CSV)")
    p.add_argument("--metrics", type=str, default=None,
                   help=f"comma-separated subset of {','.join(pipeline.METRIC_NAMES)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("rd-curve", help="rate-distortion curve of a dense diffusion model")
    p.add_argument("--ckpt", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--grid", type=str, default=None, help="comma-separated timesteps")
    p.add_argument("--grid-points", type=int, default=50)
    p.add_argument("--mc-samples", type=int, default=16)
    p.add_argument("--max-samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("scaling-report", help="analytic FLOP scaling across ambient dimensions")
    p.add_argument("--dims", type=str, required=True, help="comma-separated ambient dimensions")
    p.add_argument("--l-mean", type=float, default=1000.0)
    p.add_argument("--config", type=Path, default=None,
                   help="optional run config supplying architecture shapes")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("write-schema", help="write the config schema with defaults")
    p.add_argument("--out", type=Path, required=True)

    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_json(args.config)
    if getattr(args, "seed", None) is not None:
        config = RunConfig.from_dict({**config.to_dict(), "seed": args.seed})
    return config


def _out_dir(args: argparse.Namespace, config: Optional[RunConfig]) -> Path:
    if getattr(args, "out", None) is not None:
        return args.out
    if config is not None:
        return Path(config.out_dir)
    raise ConfigError("an output directory is required (--out)")


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad {what} list {text!r}: {exc}") from exc


def _dispatch(args: argparse.Namespace) -> list[Path]:
    if args.command == "train-savae":
        config = _load_config(args)
        return pipeline.cmd_train_savae(config, _out_dir(args, config))
    if args.command == "train-diffusion":
        config = _load_config(args)
        return pipeline.cmd_train_diffusion(config, args.savae_ckpt, _out_dir(args, config))
    if args.command == "train-dense":
        config = _load_config(args)
        return pipeline.cmd_train_dense(config, _out_dir(args, config))
    if args.command == "sample":
        return pipeline.cmd_sample(
            args.ckpt, args.out,
            savae_ckpt=args.savae_ckpt, sampler=args.sampler, count=args.n, seed=args.seed,
        )
    if args.command == "eval":
        metrics = None if args.metrics is None else [
            m.strip() for m in args.metrics.split(",") if m.strip()
        ]
        return pipeline.cmd_eval(
            args.real, args.generated, args.out, metrics=metrics, seed=args.seed
        )
    if args.command == "rd-curve":
        grid = None if args.grid is None else _parse_int_list(args.grid, "grid")
        return pipeline.cmd_rd_curve(
            args.ckpt, args.data, args.out,
            grid=grid, grid_points=args.grid_points, mc_samples=args.mc_samples,
            max_samples=args.max_samples, seed=args.seed,
        )
    if args.command == "scaling-report":
        config = RunConfig.from_json(args.config) if args.config is not None else None
        return pipeline.cmd_scaling_report(
            args.out, dims=_parse_int_list(args.dims, "dims"), l_mean=args.l_mean, config=config,
        )
    if args.command == "write-schema":
        args.out.mkdir(parents=True, exist_ok=True)
        return [write_schema(args.out / "config_schema.json")]
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        paths = _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, CodecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (CompatibilityError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - single boundary for exit-code mapping
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
