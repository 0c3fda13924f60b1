"""Experiment commands behind the CLI. Each one writes its resolved inputs next to its outputs."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from jcl import __version__
from jcl.experiments.analysis import HistogramReport, analyze_features
from jcl.experiments.probe import probe_encoder
from jcl.experiments.report import csv_text, write_csv, write_histogram, write_json
from jcl.trainer.checkpoint import load_checkpoint, save_checkpoint
from jcl.trainer.config import TrainConfig, dump_config
from jcl.trainer.data import SyntheticDataset, dataset_from_config
from jcl.trainer.train import TrainingAborted, TrainState, init_state, run
from jcl.verification import run_all

log = logging.getLogger(__name__)

SWEEP_PARAMS = {"mprime": "positive_keys", "lambda": "lam", "tau": "tau"}
PROBE_INSTANCES = 4096


def _stream(seed: int, purpose: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), purpose])))


def data_rng(seed: int) -> np.random.Generator:
    return _stream(seed, 0)


def train_rng(seed: int) -> np.random.Generator:
    return _stream(seed, 1)


def build_dataset(config: TrainConfig, num_instances: int | None = None) -> SyntheticDataset:
    """Instances are generated from ``config.seed``; a larger count extends the same sequence."""
    if num_instances is not None:
        config = config.replace(num_instances=num_instances)
    return dataset_from_config(config, data_rng(config.seed))


def _run_record(out: Path, command: str, **args) -> None:
    write_json(out / "run.json", {"command": command, "version": __version__, "args": args})


# verify-bound


def cmd_verify_bound(trials: int, seed: int, samples: int = 100_000) -> tuple[str, bool]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    results = run_all(trials, seed, samples)
    rows = [(r.suite, r.trials, r.passed, r.failed, r.worst, r.tolerance, r.note) for r in results]
    text = csv_text(["suite", "trials", "passed", "failed", "worst", "tolerance", "note"], rows)
    return text, all(r.ok for r in results)


# train


def write_train_logs(state: TrainState, out: Path) -> None:
    write_csv(
        out / "log.csv",
        ["epoch", "mean_loss", "lr", "grad_norm", "queue_size"],
        [(e["epoch"], e["mean_loss"], e["lr"], e["grad_norm"], e["queue_size"]) for e in state.epoch_log],
    )
    write_csv(
        out / "steps.csv",
        ["epoch", "step", "loss", "grad_norm", "lr"],
        [(s["epoch"], s["step"], s["loss"], s["grad_norm"], s["lr"]) for s in state.step_log],
    )
    # Wall time lives in its own file so log.csv stays byte-reproducible. Epochs
    # restored from a checkpoint have no timing and are written as nan.
    write_csv(out / "timing.csv", ["epoch", "wall_time"], [
        (e["epoch"], e.get("wall_time", float("nan"))) for e in state.epoch_log
    ])


def cmd_train(
    config: TrainConfig,
    out: str | Path,
    resume: str | Path | None = None,
    stop_epoch: int | None = None,
) -> TrainState:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if resume is not None:
        state = load_checkpoint(resume)
        if state.config.to_dict() != config.to_dict():
            raise ValueError("resume checkpoint was written with a different config")
    else:
        state = None
    dump_config(config, out / "spec.json")
    _run_record(out, "train", method=config.method, resume=None if resume is None else str(resume), stop_epoch=stop_epoch)
    dataset = build_dataset(config)
    if state is None:
        state = init_state(config, train_rng(config.seed), dataset.ambient_dim)
    try:
        run(state, dataset, stop_epoch)
    except TrainingAborted as exc:
        write_json(out / "diagnostic.json", {"error": str(exc), **exc.diagnostic})
        write_train_logs(state, out)
        raise
    save_checkpoint(state, out / "checkpoint.json")
    write_train_logs(state, out)
    return state


# probe


def cmd_probe(
    checkpoint: str | Path,
    seed: int,
    feature: str = "hidden",
    out: str | Path | None = None,
    instances: int = PROBE_INSTANCES,
) -> float:
    """Probe on ``instances`` generated instances; the first ``num_instances`` are the training set."""
    if instances < 10:
        raise ValueError("probe needs at least 10 instances")
    state = load_checkpoint(checkpoint)
    config = state.config
    dataset = build_dataset(config, instances)
    acc = probe_encoder(state.query, dataset, config.num_clusters, np.random.Generator(np.random.PCG64(seed)), feature)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        _run_record(out, "probe", checkpoint=str(checkpoint), seed=seed, feature=feature, instances=instances)
        write_csv(
            out / "probe.csv",
            ["checkpoint", "feature", "seed", "instances", "accuracy"],
            [(str(checkpoint), feature, seed, instances, acc)],
        )
    return acc


# sweep


def parse_sweep_values(param: str, values: str) -> list:
    if param not in SWEEP_PARAMS:
        raise ValueError(f"param must be one of {sorted(SWEEP_PARAMS)}, got {param!r}")
    items = [v.strip() for v in values.split(",") if v.strip()]
    if not items:
        raise ValueError("no sweep values given")
    return [int(v) for v in items] if param == "mprime" else [float(v) for v in items]


def cmd_sweep(
    param: str,
    values: list,
    base: TrainConfig,
    out: str | Path,
    feature: str = "hidden",
    probe_instances: int = PROBE_INSTANCES,
) -> list[tuple]:
    """Train and probe once per value, holding every other field of ``base`` fixed."""
    if not values:
        raise ValueError("no sweep values given")
    field = SWEEP_PARAMS[param]
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    dump_config(base, out / "spec.json")
    _run_record(out, "sweep", param=param, values=list(values), feature=feature, probe_instances=probe_instances)
    rows = []
    for value in values:
        run_dir = out / f"{param}={value}"
        try:
            config = base.replace(**{field: value})
            state = cmd_train(config, run_dir)
            acc = cmd_probe(run_dir / "checkpoint.json", config.seed, feature, run_dir, probe_instances)
            rows.append((param, value, acc, state.epoch_log[-1]["mean_loss"] if state.epoch_log else float("nan"), "ok"))
        except Exception as exc:  # a failed run is recorded and the sweep moves on
            log.warning("sweep %s=%s failed: %s", param, value, exc)
            rows.append((param, value, float("nan"), float("nan"), f"failed: {type(exc).__name__}"))
    write_csv(out / "sweep.csv", ["param", "value", "probe_accuracy", "final_loss", "status"], rows)
    return rows


# analyze-features


def cmd_analyze_features(
    checkpoint: str | Path,
    instances: int,
    augmentations: int,
    seed: int,
    out: str | Path | None = None,
    feature: str = "hidden",
    bins: int = 40,
) -> tuple[HistogramReport, HistogramReport]:
    if instances < 1 or augmentations < 1:
        raise ValueError("instances and augmentations must be >= 1")
    state = load_checkpoint(checkpoint)
    dataset = build_dataset(state.config, instances)
    sim, var = analyze_features(
        state.query, dataset, augmentations, np.random.Generator(np.random.PCG64(seed)), feature, bins
    )
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        _run_record(
            out, "analyze-features", checkpoint=str(checkpoint), instances=instances,
            augmentations=augmentations, seed=seed, feature=feature, bins=bins,
        )
        write_histogram(out / "similarity_hist.csv", sim)
        write_histogram(out / "variance_hist.csv", var)
        write_csv(
            out / "summary.csv",
            ["quantity", "mean", "std", "count"],
            [("similarity", sim.mean, sim.std, sim.count), ("variance", var.mean, var.std, var.count)],
        )
    return sim, var
