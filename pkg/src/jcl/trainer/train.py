"""The momentum-encoder training loop for the three objectives.

``jcl``      closed-form Gaussian bound over M' positive keys
``infonce``  single positive key per query
``vanilla``  average of M' single-key losses
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from jcl.losses import contrastive_batch
from jcl.stats import batch_statistics
from jcl.trainer.config import TrainConfig
from jcl.trainer.data import SyntheticDataset, augment_batch
from jcl.trainer.encoder import EncoderParams, backward, forward, init_encoder
from jcl.trainer.optim import cosine_lr, momentum_update, sgd_step
from jcl.trainer.queue import NegativeQueue

log = logging.getLogger(__name__)


class TrainingAborted(RuntimeError):
    def __init__(self, message: str, diagnostic: dict):
        super().__init__(message)
        self.diagnostic = diagnostic


@dataclass
class TrainState:
    config: TrainConfig
    query: EncoderParams
    key: EncoderParams
    velocity: list[np.ndarray]
    queue: NegativeQueue
    rng: np.random.Generator
    epoch: int = 0
    step: int = 0
    step_log: list[dict] = field(default_factory=list)
    epoch_log: list[dict] = field(default_factory=list)


def steps_per_epoch(config: TrainConfig, n: int) -> int:
    return max(1, n // config.batch_size)


def init_state(config: TrainConfig, rng: np.random.Generator, ambient_dim: int) -> TrainState:
    """Initialise both encoders (key = copy of query) and pre-fill the queue with random unit vectors."""
    sizes = [ambient_dim, config.hidden_dim, config.embed_dim]
    query = init_encoder(sizes, rng)
    key = query.copy()
    queue = NegativeQueue(config.queue_capacity, config.embed_dim)
    fill = rng.standard_normal((config.queue_capacity, config.embed_dim))
    queue.push(fill / np.linalg.norm(fill, axis=1, keepdims=True))
    velocity = [np.zeros_like(a) for a in query.arrays()]
    return TrainState(config, query, key, velocity, queue, rng)


def _batch_objective(config: TrainConfig, Q, keys, negatives):
    """Per-instance losses, query gradients and the vectors to enqueue."""
    method = config.method
    if method == "jcl":
        mu, sigma = batch_statistics(keys)
        values, grads = contrastive_batch(Q, mu, sigma, negatives, config.tau, config.lam)
        return values, grads, mu
    if method == "infonce":
        k = keys[:, 0]
        values, grads = contrastive_batch(Q, k, None, negatives, config.tau, 0.0)
        return values, grads, k
    m = keys.shape[1]
    values = np.zeros(Q.shape[0])
    grads = np.zeros_like(Q)
    for j in range(m):
        v, g = contrastive_batch(Q, keys[:, j], None, negatives, config.tau, 0.0)
        values = values + v
        grads = grads + g
    return values / m, grads / m, keys.sum(axis=1) / m


def train_step(state: TrainState, dataset: SyntheticDataset, idx: np.ndarray, lr: float) -> dict:
    config = state.config
    n = idx.shape[0]
    n_keys = 1 if config.method == "infonce" else config.positive_keys
    views = augment_batch(dataset.bases[idx], n_keys + 1, dataset.aug_noise, dataset.aug_gain, state.rng)
    Q, cache = forward(state.query, views[:, 0])
    K, _ = forward(state.key, views[:, 1:].reshape(n * n_keys, -1))
    K = K.reshape(n, n_keys, -1)

    reason = "non-finite loss"
    try:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            values, gq, enqueue = _batch_objective(config, Q, K, state.queue.negatives())
            loss = float(np.sum(values) / n)
            grads = backward(state.query, cache, gq / n)
            grad_norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
    except ArithmeticError as exc:
        reason = f"{type(exc).__name__}: {exc}"
        values, loss, grad_norm = np.full(n, math.nan), math.nan, math.nan
    if not (math.isfinite(loss) and math.isfinite(grad_norm)):
        raise TrainingAborted(
            f"{reason} at epoch {state.epoch} step {state.step}",
            {
                "epoch": state.epoch,
                "step": state.step,
                "loss": loss,
                "grad_norm": grad_norm,
                "batch_indices": idx.tolist(),
                "per_instance_loss": values.tolist(),
            },
        )

    state.query, state.velocity = sgd_step(
        state.query, grads, lr, state.velocity, config.sgd_momentum, config.weight_decay
    )
    state.key = momentum_update(state.key, state.query, config.momentum)
    state.queue.push(enqueue)
    return {"epoch": state.epoch, "step": state.step, "loss": loss, "grad_norm": grad_norm, "lr": lr}


def run(state: TrainState, dataset: SyntheticDataset, stop_epoch: int | None = None) -> TrainState:
    """Advance ``state`` until ``config.epochs`` (or ``stop_epoch``) epochs are complete."""
    config = state.config
    n = len(dataset)
    if n == 0:
        raise ValueError("dataset is empty")
    per_epoch = steps_per_epoch(config, n)
    total = config.epochs * per_epoch
    batch = min(config.batch_size, n)
    end = config.epochs if stop_epoch is None else min(stop_epoch, config.epochs)
    while state.epoch < end:
        start = time.perf_counter()
        perm = state.rng.permutation(n)
        records = []
        for s in range(per_epoch):
            idx = perm[s * batch:(s + 1) * batch]
            rec = train_step(state, dataset, idx, cosine_lr(state.step, total, config.lr))
            records.append(rec)
            state.step_log.append(rec)
            state.step += 1
        summary = {
            "epoch": state.epoch,
            "mean_loss": sum(r["loss"] for r in records) / len(records),
            "lr": records[0]["lr"],
            "grad_norm": sum(r["grad_norm"] for r in records) / len(records),
            "queue_size": len(state.queue),
            "wall_time": time.perf_counter() - start,
        }
        state.epoch_log.append(summary)
        log.info("epoch %d loss %.6f lr %.5f", state.epoch, summary["mean_loss"], summary["lr"])
        state.epoch += 1
    return state


def train(
    config: TrainConfig, dataset: SyntheticDataset, rng: np.random.Generator
) -> tuple[EncoderParams, TrainState]:
    """Train from scratch; returns the query encoder and the full final state (logs included)."""
    state = init_state(config, rng, dataset.ambient_dim)
    run(state, dataset)
    return state.query, state


def train_baseline(
    config: TrainConfig, dataset: SyntheticDataset, rng: np.random.Generator
) -> tuple[EncoderParams, TrainState]:
    return train(config.replace(method="infonce"), dataset, rng)
