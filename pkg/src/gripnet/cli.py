"""Command-line entry points.

Subcommands: ``check`` validates a supergraph declaration, ``train`` fits a
model and writes a checkpoint plus per-epoch history, ``eval`` recomputes test
metrics for a checkpoint, ``export`` writes embedding TSVs, and ``synth``
generates a planted synthetic dataset. Logs go to stderr; machine-readable
output goes only to the declared files (and ``check``'s report to stdout).
Exit status is 0 on success, 1 on any failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .checkpoint import CheckpointError, load_checkpoint
from .config import ConfigError, RunConfig, parse_config
from .graph import GraphFormatError
from .metrics import DegenerateLabelError
from .pipeline import run_check, run_eval, run_export, run_training
from .supergraph import SupergraphError
from .synthetic import InfeasibleSpec, parse_synthetic_spec, generate_synthetic
from .tasks import SamplingError

log = logging.getLogger("gripnet")

_USER_ERRORS = (
    CheckpointError,
    ConfigError,
    DegenerateLabelError,
    GraphFormatError,
    InfeasibleSpec,
    SamplingError,
    SupergraphError,
    FileNotFoundError,
    KeyError,
    ValueError,
)


def _out_dir(args, config: RunConfig | None = None, default: str = "gripnet-run") -> Path:
    if args.out:
        return Path(args.out)
    if config is not None and config.out_dir:
        return Path(config.out_dir)
    return Path(default)


def cmd_check(args) -> int:
    config = parse_config(args.config)
    print(run_check(config))
    return 0


def cmd_train(args) -> int:
    config = parse_config(args.config)
    out = _out_dir(args, config)
    if args.seed is not None:
        log.info("overriding training seed with %d", args.seed)
    paths = run_training(config, out, seed_override=args.seed)
    log.info("checkpoint: %s", paths["checkpoint"])
    log.info("history: %s", paths["history"])
    log.info("report: %s", paths["report"])
    return 0


def cmd_eval(args) -> int:
    if args.config:
        config = parse_config(args.config)
    else:
        config, _, _ = load_checkpoint(args.checkpoint)
    out = _out_dir(args, config)
    paths = run_eval(config, args.checkpoint, out)
    log.info("report: %s", paths["report"])
    return 0


def cmd_export(args) -> int:
    out = _out_dir(args)
    paths = run_export(args.checkpoint, out)
    for cat, path in sorted(paths.items()):
        log.info("embeddings for %s: %s", cat, path)
    return 0


def cmd_synth(args) -> int:
    spec = parse_synthetic_spec(args.config)
    if args.seed is not None:
        spec = type(spec)(**{**spec.to_json_dict(), "seed": args.seed})
    paths = generate_synthetic(spec, _out_dir(args, default="synthetic-data"))
    log.info("dataset written to %s", Path(paths["nodes"]).parent)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gripnet",
        description=(
            "Heterogeneous-graph embedding over a supergraph: supervertices "
            "of semantically coherent node types connected by directed "
            "superedges, trained for link prediction or node classification."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="validate the supergraph declaration")
    check.add_argument("--config", required=True, help="run config JSON")
    check.set_defaults(func=cmd_check)

    train = sub.add_parser("train", help="train and write checkpoint + history")
    train.add_argument("--config", required=True, help="run config JSON")
    train.add_argument("--seed", type=int, default=None, help="override training seed")
    train.add_argument("--out", default=None, help="output directory")
    train.set_defaults(func=cmd_train)

    evaluate = sub.add_parser("eval", help="recompute test metrics for a checkpoint")
    evaluate.add_argument("--config", default=None, help="run config JSON (default: embedded)")
    evaluate.add_argument("--checkpoint", required=True, help="checkpoint JSON path")
    evaluate.add_argument("--out", default=None, help="output directory")
    evaluate.set_defaults(func=cmd_eval)

    export = sub.add_parser("export", help="write embedding TSVs from a checkpoint")
    export.add_argument("--checkpoint", required=True, help="checkpoint JSON path")
    export.add_argument("--out", default=None, help="output directory")
    export.set_defaults(func=cmd_export)

    synth = sub.add_parser("synth", help="generate a planted synthetic dataset")
    synth.add_argument("--config", required=True, help="synthetic spec JSON")
    synth.add_argument("--seed", type=int, default=None, help="override spec seed")
    synth.add_argument("--out", required=True, help="output directory")
    synth.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _USER_ERRORS as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
