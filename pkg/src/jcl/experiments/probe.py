"""Linear probe: softmax regression trained by minibatch SGD on frozen features."""

from __future__ import annotations

import numpy as np

from jcl.trainer.data import SyntheticDataset
from jcl.trainer.encoder import EncoderParams, forward, hidden_features

FEATURES = ("hidden", "output")


def extract_features(encoder: EncoderParams, x: np.ndarray, feature: str = "hidden") -> np.ndarray:
    """Pre-projection activations (``hidden``) or the normalised embedding (``output``)."""
    if feature == "hidden":
        return hidden_features(encoder, x)
    if feature == "output":
        return forward(encoder, x)[0]
    raise ValueError(f"feature must be one of {FEATURES}, got {feature!r}")


def split_indices(n: int, rng: np.random.Generator, test_fraction: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    perm = rng.permutation(n)
    n_test = max(1, int(round(n * test_fraction)))
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def train_softmax(
    x: np.ndarray,
    y: np.ndarray,
    num_classes: int,
    rng: np.random.Generator,
    epochs: int = 100,
    lr: float = 0.5,
    batch_size: int = 64,
) -> tuple[np.ndarray, np.ndarray]:
    n, dim = x.shape
    w = np.zeros((dim, num_classes))
    b = np.zeros(num_classes)
    onehot = np.eye(num_classes)[y]
    for _ in range(epochs):
        perm = rng.permutation(n)
        for s in range(0, n, batch_size):
            idx = perm[s:s + batch_size]
            logits = x[idx] @ w + b
            logits -= logits.max(axis=1, keepdims=True)
            p = np.exp(logits)
            p /= p.sum(axis=1, keepdims=True)
            g = (p - onehot[idx]) / idx.shape[0]
            w -= lr * (x[idx].T @ g)
            b -= lr * g.sum(axis=0)
    return w, b


def probe_accuracy(
    features: np.ndarray,
    labels: np.ndarray,
    num_classes: int,
    rng: np.random.Generator,
    test_fraction: float = 0.2,
    epochs: int = 100,
    lr: float = 0.5,
) -> float:
    """Top-1 accuracy on a held-out split; features are standardised with train statistics."""
    train_idx, test_idx = split_indices(features.shape[0], rng, test_fraction)
    mean = features[train_idx].mean(axis=0)
    std = features[train_idx].std(axis=0)
    std[std == 0] = 1.0
    x = (features - mean) / std
    w, b = train_softmax(x[train_idx], labels[train_idx], num_classes, rng, epochs, lr)
    pred = np.argmax(x[test_idx] @ w + b, axis=1)
    return float(np.mean(pred == labels[test_idx]))


def probe_encoder(
    encoder: EncoderParams,
    dataset: SyntheticDataset,
    num_classes: int,
    rng: np.random.Generator,
    feature: str = "hidden",
) -> float:
    feats = extract_features(encoder, dataset.bases, feature)
    return probe_accuracy(feats, dataset.labels, num_classes, rng)
