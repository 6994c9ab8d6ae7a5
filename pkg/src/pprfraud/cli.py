"""Command-line entry point.

    pprfraud run --config pipeline.ini
    pprfraud synth --out_dir out --seed 7
    pprfraud psi --config pipeline.ini

Exit codes: 0 success, 1 configuration or usage error, 2 stage failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import SCHEMA, load_config
from .errors import ConfigError, MissingIntermediate, StageError
from .pipeline import STAGES, run_pipeline, run_stage

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 1, 2
_PATH_KEYS = {"out_dir", "ledger"}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", "-c", help="INI config file")
    p.add_argument("--verbose", "-v", action="store_true")
    group = p.add_argument_group("config overrides")
    for key, (section, _, default) in SCHEMA.items():
        flags = [f"--{key}"]
        if "_" in key:
            flags.append(f"--{key.replace('_', '-')}")
        group.add_argument(*flags, dest=f"set_{key}", metavar="VALUE", help=f"[{section}] default: {default}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pprfraud", description="Fraud exposure features from personalized PageRank.")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="run every stage end to end"))
    helps = {
        "synth": "generate ledger.csv and rings.csv",
        "graph-stats": "build the account graph, write edges.csv, print counts",
        "ppr": "compute personalized PageRank scores (ppr_scores.csv)",
        "features": "build features_train.csv and features_test.csv",
        "train": "fit the logistic models (model.json)",
        "evaluate": "score the test set (metrics.json, roc.csv, pr.csv)",
        "psi": "feature stability between train and test (psi.csv)",
        "report": "importance table and SVG plots",
    }
    for name in STAGES:
        _add_common(sub.add_parser(name, help=helps[name]))
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, str]:
    out = {}
    for key in SCHEMA:
        value = getattr(args, f"set_{key}")
        if value is None:
            continue
        if key in _PATH_KEYS and value:
            # flags are relative to the shell, not to the config file
            value = str(Path(value).resolve())
        out[key] = value
    return out


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; keep 2 reserved for stage failures
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "run":
            result = run_pipeline(cfg)
        else:
            result = run_stage(cfg, args.command)
    except (StageError, MissingIntermediate) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
