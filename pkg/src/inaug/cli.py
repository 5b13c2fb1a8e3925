"""Command-line entry point.

Subcommands: augment, preview, bench, ood-gen. A run is configured by a
preset and/or a TOML config file; flags override scalar config fields.
Exit codes: 0 success, 1 configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .data import DatasetError, encode_png
from .pipeline import (
    ConfigError,
    EmptySource,
    SinkConfig,
    load_config,
    run_augment,
    run_bench,
    run_ood_gen,
    run_preview,
)
from .policy import SchemaError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inaug",
        description="Deterministic copy-resize-augment-paste image augmentation",
    )
    parser.add_argument("--version", action="version", version=f"inaug {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("augment", "augment a dataset and write outputs plus a manifest"),
        ("preview", "render a grid of original and augmented samples"),
        ("bench", "measure single-core augmentation throughput"),
        ("ood-gen", "generate a padded out-of-distribution evaluation set"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="TOML config file")
        p.add_argument("--preset", help="shipped preset name used as the config base")
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--workers", type=int, help="override run.workers")
        p.add_argument("--epochs", type=int, help="override run.epochs")
        p.add_argument("--out", type=Path, help="override the output location")
    return parser


def _overrides(args) -> dict:
    run = {}
    if args.seed is not None:
        run["seed"] = args.seed
    if args.workers is not None:
        run["workers"] = args.workers
    if args.epochs is not None:
        run["epochs"] = args.epochs
    doc: dict = {"run": run} if run else {}
    if args.out is not None and args.command in ("augment", "ood-gen"):
        doc["sink"] = {"root": str(args.out)}
    return doc


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.preset, _overrides(args))
    except (ConfigError, SchemaError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "augment":
            manifest = run_augment(cfg)
            print(
                f"wrote {len(manifest.entries)} outputs "
                f"({manifest.skipped} skipped) under {cfg.sink.root}"
            )
        elif args.command == "preview":
            grid = run_preview(cfg, cfg.preview_rows, cfg.preview_cols)
            out = args.out if args.out is not None else Path("preview.png")
            out.write_bytes(encode_png(grid))
            print(f"wrote {grid.width}x{grid.height} preview to {out}")
        elif args.command == "bench":
            report = run_bench(cfg, cfg.bench_duration)
            text = report.to_text()
            if args.out is not None:
                args.out.write_text(text)
            print(text, end="")
        else:  # ood-gen
            if cfg.ood is None:
                print("config error: ood-gen needs an [ood] section", file=sys.stderr)
                return 1
            if cfg.source is None or cfg.sink is None:
                print("config error: ood-gen needs [source] and [sink]", file=sys.stderr)
                return 1
            manifest = run_ood_gen(cfg.source, cfg.ood, SinkConfig(cfg.sink.root, "png"))
            print(
                f"wrote {len(manifest.entries)} padded images "
                f"({manifest.skipped} skipped) under {cfg.sink.root}"
            )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DatasetError, EmptySource, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
