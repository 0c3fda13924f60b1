from __future__ import annotations

import math

import numpy as np

from jcl.trainer.encoder import EncoderParams


def cosine_lr(step: int, total: int, lr0: float) -> float:
    if not 0 <= step <= total:
        raise ValueError(f"step {step} outside [0, {total}]")
    if total == 0:
        return lr0
    return lr0 * 0.5 * (1.0 + math.cos(math.pi * step / total))


def sgd_step(
    params: EncoderParams,
    grads: list[np.ndarray],
    lr: float,
    velocity: list[np.ndarray] | None = None,
    momentum: float = 0.9,
    weight_decay: float = 1e-4,
) -> tuple[EncoderParams, list[np.ndarray]]:
    """Heavy-ball SGD with coupled weight decay: v <- m v + (g + wd theta); theta <- theta - lr v."""
    arrays = params.arrays()
    if len(grads) != len(arrays) or any(g.shape != a.shape for g, a in zip(grads, arrays)):
        raise ValueError("gradient shapes do not match parameters")
    if lr < 0:
        raise ValueError("lr must be >= 0")
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise FloatingPointError("non-finite gradient")
    if velocity is None:
        velocity = [np.zeros_like(a) for a in arrays]
    new_v = [momentum * v + (g + weight_decay * a) for v, g, a in zip(velocity, grads, arrays)]
    new_arrays = [a - lr * v for a, v in zip(arrays, new_v)]
    return params.with_arrays(new_arrays), new_v


def momentum_update(key: EncoderParams, query: EncoderParams, m: float) -> EncoderParams:
    if not key.same_architecture(query):
        raise ValueError("key and query encoders differ in architecture")
    if not 0 <= m <= 1:
        raise ValueError("m must lie in [0, 1]")
    return key.with_arrays([m * k + (1.0 - m) * q for k, q in zip(key.arrays(), query.arrays())])
