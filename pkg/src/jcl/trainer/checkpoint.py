"""JSON checkpoints holding everything needed to resume a run bit-exactly.

Floats are written with ``repr`` precision by the json module, so every
array round-trips exactly. Arrays are stored as ``{"shape": [...],
"values": [...]}`` with row-major values.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from jcl.trainer.config import TrainConfig
from jcl.trainer.encoder import EncoderParams
from jcl.trainer.queue import NegativeQueue
from jcl.trainer.train import TrainState

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def _arr(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "values": [float(v) for v in np.ravel(a)]}


def _unarr(d: dict) -> np.ndarray:
    values = np.asarray(d["values"], dtype=np.float64)
    shape = tuple(d["shape"])
    if values.size != int(np.prod(shape)):
        raise CheckpointError(f"array of shape {shape} has {values.size} values")
    return values.reshape(shape)


def _encoder(p: EncoderParams) -> dict:
    return {
        "activation": p.activation,
        "normalize": p.normalize,
        "weights": [_arr(w) for w in p.weights],
        "biases": [_arr(b) for b in p.biases],
    }


def _unencoder(d: dict) -> EncoderParams:
    return EncoderParams(
        [_unarr(w) for w in d["weights"]],
        [_unarr(b) for b in d["biases"]],
        d["activation"],
        d["normalize"],
    )


def state_to_dict(state: TrainState) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "config": state.config.to_dict(),
        "seed": state.config.seed,
        "epoch": state.epoch,
        "step": state.step,
        "query_encoder": _encoder(state.query),
        "key_encoder": _encoder(state.key),
        "velocity": [_arr(v) for v in state.velocity],
        "queue": {
            "capacity": state.queue.capacity,
            "ptr": state.queue.ptr,
            "size": state.queue.size,
            "buffer": _arr(state.queue.buffer),
        },
        "rng_state": state.rng.bit_generator.state,
        "step_log": state.step_log,
        # Wall times are left out so identical runs give identical checkpoint bytes.
        "epoch_log": [{k: v for k, v in e.items() if k != "wall_time"} for e in state.epoch_log],
    }


def state_from_dict(d: dict) -> TrainState:
    if d.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format {d.get('format_version')!r}")
    try:
        config = TrainConfig.from_dict(d["config"])
        query = _unencoder(d["query_encoder"])
        key = _unencoder(d["key_encoder"])
        q = d["queue"]
        buffer = _unarr(q["buffer"])
        queue = NegativeQueue(q["capacity"], buffer.shape[1])
        queue.buffer, queue.ptr, queue.size = buffer, q["ptr"], q["size"]
        bitgen = np.random.PCG64()
        bitgen.state = d["rng_state"]
        rng = np.random.Generator(bitgen)
        velocity = [_unarr(v) for v in d["velocity"]]
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc
    if not query.same_architecture(key):
        raise CheckpointError("query and key encoders disagree")
    return TrainState(
        config, query, key, velocity, queue, rng, d["epoch"], d["step"], d["step_log"], d["epoch_log"]
    )


def save_checkpoint(state: TrainState, path: str | Path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(state_to_dict(state), fh)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> TrainState:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not a JSON checkpoint ({exc})") from exc
    return state_from_dict(data)
