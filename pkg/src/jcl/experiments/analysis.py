"""Intra-instance feature similarity and variance, one sample point per instance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from jcl.experiments.probe import extract_features
from jcl.trainer.data import SyntheticDataset, augment_batch
from jcl.trainer.encoder import EncoderParams


@dataclass
class HistogramReport:
    edges: np.ndarray
    counts: np.ndarray
    mean: float
    std: float
    count: int


def histogram(values: np.ndarray, lo: float, hi: float, bins: int) -> HistogramReport:
    """Fixed-edge histogram; values are clipped into [lo, hi] so every sample is counted."""
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(np.clip(values, lo, hi), bins=edges)
    return HistogramReport(edges, counts, float(np.mean(values)), float(np.std(values)), int(values.shape[0]))


def instance_statistics(
    encoder: EncoderParams,
    dataset: SyntheticDataset,
    augmentations: int,
    rng: np.random.Generator,
    feature: str = "hidden",
    chunk: int = 256,
) -> tuple[np.ndarray, np.ndarray]:
    """Per instance: mean cosine similarity over all ordered view pairs (self-pairs
    included) and the mean diagonal of the biased view covariance."""
    sims, variances = [], []
    for start in range(0, len(dataset), chunk):
        bases = dataset.bases[start:start + chunk]
        views = augment_batch(bases, augmentations, dataset.aug_noise, dataset.aug_gain, rng)
        n = bases.shape[0]
        f = extract_features(encoder, views.reshape(n * augmentations, -1), feature)
        norms = np.linalg.norm(f, axis=1, keepdims=True)
        f = (f / np.where(norms == 0, 1.0, norms)).reshape(n, augmentations, -1)
        gram = np.einsum("nid,njd->nij", f, f)
        sims.append(gram.mean(axis=(1, 2)))
        centred = f - f.mean(axis=1, keepdims=True)
        variances.append((centred ** 2).mean(axis=1).mean(axis=1))
    return np.concatenate(sims), np.concatenate(variances)


def analyze_features(
    encoder: EncoderParams,
    dataset: SyntheticDataset,
    augmentations: int,
    rng: np.random.Generator,
    feature: str = "hidden",
    bins: int = 40,
) -> tuple[HistogramReport, HistogramReport]:
    sims, variances = instance_statistics(encoder, dataset, augmentations, rng, feature)
    dim = extract_features(encoder, dataset.bases[:1], feature).shape[1]
    # For unit features the mean per-dimension variance is (1 - similarity) / dim <= 1 / dim.
    return histogram(sims, -1.0, 1.0, bins), histogram(variances, 0.0, 1.0 / dim, bins)
