"""Command-line entry point: ``jcl <command> ...``.

Output verbosity comes from the ``JCL_VERBOSITY`` environment variable
(``quiet``, ``info`` or ``debug``; default ``info``).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from jcl.experiments.commands import (
    PROBE_INSTANCES,
    SWEEP_PARAMS,
    cmd_analyze_features,
    cmd_probe,
    cmd_sweep,
    cmd_train,
    cmd_verify_bound,
    parse_sweep_values,
)
from jcl.experiments.probe import FEATURES
from jcl.trainer.checkpoint import CheckpointError
from jcl.trainer.config import METHODS, TrainConfig, load_config
from jcl.trainer.train import TrainingAborted

LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _configure_logging() -> None:
    name = os.environ.get("JCL_VERBOSITY", "info").lower()
    if name not in LEVELS:
        raise SystemExit(f"JCL_VERBOSITY must be one of {sorted(LEVELS)}, got {name!r}")
    logging.basicConfig(level=LEVELS[name], format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _config(path: str | None, method: str | None) -> TrainConfig:
    config = load_config(path) if path else TrainConfig()
    return config.replace(method=method) if method else config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jcl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-bound", help="run the closed-form property suites")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100_000, help="Monte-Carlo draws per instance")
    p.add_argument("--out", help="write the CSV report here instead of stdout")

    p = sub.add_parser("train", help="train an encoder")
    p.add_argument("--spec", help="JSON file of TrainConfig fields")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--out", required=True)
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--stop-epoch", type=int, help="stop after this many epochs (checkpoint for later resume)")

    p = sub.add_parser("probe", help="linear probe on frozen features")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--feature", choices=FEATURES, default="hidden")
    p.add_argument("--instances", type=int, default=PROBE_INSTANCES, help="size of the probe set")
    p.add_argument("--out")

    p = sub.add_parser("sweep", help="train + probe over one hyperparameter")
    p.add_argument("--param", choices=sorted(SWEEP_PARAMS), required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--spec")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--feature", choices=FEATURES, default="hidden")
    p.add_argument("--probe-instances", type=int, default=PROBE_INSTANCES)
    p.add_argument("--out", required=True)

    p = sub.add_parser("analyze-features", help="intra-instance similarity/variance histograms")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--instances", type=int, default=4096)
    p.add_argument("--augmentations", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--feature", choices=FEATURES, default="hidden")
    p.add_argument("--bins", type=int, default=40)
    p.add_argument("--out")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging()
    try:
        if args.command == "verify-bound":
            text, ok = cmd_verify_bound(args.trials, args.seed, args.samples)
            if args.out:
                _write(args.out, text)
            else:
                sys.stdout.write(text)
            return 0 if ok else 1
        if args.command == "train":
            cmd_train(_config(args.spec, args.method), args.out, args.resume, args.stop_epoch)
            return 0
        if args.command == "probe":
            acc = cmd_probe(args.checkpoint, args.seed, args.feature, args.out, args.instances)
            print(f"accuracy,{acc:.17g}")
            return 0
        if args.command == "sweep":
            values = parse_sweep_values(args.param, args.values)
            rows = cmd_sweep(
                args.param, values, _config(args.spec, args.method), args.out, args.feature, args.probe_instances
            )
            return 0 if all(r[-1] == "ok" for r in rows) else 1
        if args.command == "analyze-features":
            sim, var = cmd_analyze_features(
                args.checkpoint, args.instances, args.augmentations, args.seed,
                args.out, args.feature, args.bins,
            )
            print(f"similarity_mean,{sim.mean:.17g}")
            print(f"variance_mean,{var.mean:.17g}")
            return 0
    except TrainingAborted as exc:
        logging.getLogger("jcl").error("%s", exc)
        return 3
    except (CheckpointError, ValueError, FileNotFoundError) as exc:
        logging.getLogger("jcl").error("%s", exc)
        return 2
    return 2


def _write(path: str, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


if __name__ == "__main__":
    sys.exit(main())
