"""Small MLP encoders with an optional l2-normalised output and manual backprop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "identity")


@dataclass
class EncoderParams:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"
    normalize: bool = True

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias per weight matrix and at least one layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ValueError(f"layer {i}: weight {w.shape} and bias {b.shape} disagree")
            if i and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError(f"layer {i} input does not match previous output")

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]

    def arrays(self) -> list[np.ndarray]:
        return [a for pair in zip(self.weights, self.biases) for a in pair]

    def with_arrays(self, arrays: list[np.ndarray]) -> "EncoderParams":
        return EncoderParams(list(arrays[0::2]), list(arrays[1::2]), self.activation, self.normalize)

    def copy(self) -> "EncoderParams":
        return self.with_arrays([a.copy() for a in self.arrays()])

    def same_architecture(self, other: "EncoderParams") -> bool:
        return (
            self.activation == other.activation
            and self.normalize == other.normalize
            and [a.shape for a in self.arrays()] == [a.shape for a in other.arrays()]
        )

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


def init_encoder(
    sizes: list[int], rng: np.random.Generator, activation: str = "relu", normalize: bool = True
) -> EncoderParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases, layer by layer."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return EncoderParams(weights, biases, activation, normalize)


def _act(name: str, z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0) if name == "relu" else z


@dataclass
class ForwardCache:
    inputs: list[np.ndarray] = field(default_factory=list)
    pre: list[np.ndarray] = field(default_factory=list)
    raw_out: np.ndarray | None = None
    out_norm: np.ndarray | None = None


def forward(params: EncoderParams, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Batch forward pass; ``x`` is (B, in_dim). Returns outputs (B, out_dim) and the cache."""
    cache = ForwardCache()
    h = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        cache.inputs.append(h)
        z = h @ w.T + b
        cache.pre.append(z)
        h = z if i == last else _act(params.activation, z)
    cache.raw_out = h
    if params.normalize:
        norm = np.linalg.norm(h, axis=1, keepdims=True)
        if np.any(norm == 0):
            raise FloatingPointError("encoder produced a zero output; cannot normalize")
        cache.out_norm = norm
        h = h / norm
    if not np.all(np.isfinite(h)):
        raise FloatingPointError("non-finite encoder output")
    return h, cache


def hidden_features(params: EncoderParams, x: np.ndarray) -> np.ndarray:
    """Activations entering the last layer: the pre-projection feature."""
    h = x
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        h = _act(params.activation, h @ w.T + b)
    return h


def encode(params: EncoderParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.in_dim,):
        raise ValueError(f"expected input of shape ({params.in_dim},), got {x.shape}")
    return forward(params, x[None, :])[0][0]


def backward(params: EncoderParams, cache: ForwardCache, grad_out: np.ndarray) -> list[np.ndarray]:
    """Gradients of a scalar loss w.r.t. every array, in ``params.arrays()`` order."""
    g = grad_out
    if params.normalize:
        y = cache.raw_out / cache.out_norm
        g = (g - y * np.sum(y * g, axis=1, keepdims=True)) / cache.out_norm
    grads: list[np.ndarray] = []
    last = len(params.weights) - 1
    for i in range(last, -1, -1):
        if i != last and params.activation == "relu":
            g = g * (cache.pre[i] > 0)
        grads.append(g.sum(axis=0))
        grads.append(g.T @ cache.inputs[i])
        if i:
            g = g @ params.weights[i]
    grads.reverse()
    return grads
