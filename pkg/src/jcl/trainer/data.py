"""Synthetic instance-discrimination data.

Instances are unit vectors drawn around a small set of latent cluster
centres, so a linear probe on learned features has class signal. An
augmented view is ``gain * base + noise`` with a per-view gain drawn
uniformly from ``[1 - aug_gain, 1 + aug_gain]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SyntheticInstance:
    index: int
    base: np.ndarray
    label: int
    aug_noise: float
    aug_gain: float


@dataclass(frozen=True)
class SyntheticDataset:
    bases: np.ndarray
    labels: np.ndarray
    aug_noise: float
    aug_gain: float

    def __len__(self) -> int:
        return self.bases.shape[0]

    def __getitem__(self, i: int) -> SyntheticInstance:
        return SyntheticInstance(i, self.bases[i], int(self.labels[i]), self.aug_noise, self.aug_gain)

    @property
    def ambient_dim(self) -> int:
        return self.bases.shape[1]


def _unit_rows(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def make_dataset(
    num_instances: int,
    ambient_dim: int,
    num_clusters: int,
    cluster_spread: float,
    aug_noise: float,
    aug_gain: float,
    rng: np.random.Generator,
) -> SyntheticDataset:
    centres = _unit_rows(rng.standard_normal((num_clusters, ambient_dim)))
    labels = np.arange(num_instances) % num_clusters
    offsets = rng.standard_normal((num_instances, ambient_dim)) * (cluster_spread / np.sqrt(ambient_dim))
    bases = _unit_rows(centres[labels] + offsets)
    return SyntheticDataset(bases, labels, float(aug_noise), float(aug_gain))


def dataset_from_config(config, rng: np.random.Generator) -> SyntheticDataset:
    return make_dataset(
        config.num_instances,
        config.ambient_dim,
        config.num_clusters,
        config.cluster_spread,
        config.aug_noise,
        config.aug_gain,
        rng,
    )


def augment_batch(
    bases: np.ndarray, count: int, aug_noise: float, aug_gain: float, rng: np.random.Generator
) -> np.ndarray:
    """Return ``count`` views of every row of ``bases``, shape (N, count, A)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    n, dim = bases.shape
    gains = rng.uniform(1.0 - aug_gain, 1.0 + aug_gain, size=(n, count))
    noise = rng.standard_normal((n, count, dim))
    return gains[:, :, None] * bases[:, None, :] + aug_noise * noise


def augment(inst: SyntheticInstance, count: int, rng: np.random.Generator) -> np.ndarray:
    return augment_batch(inst.base[None, :], count, inst.aug_noise, inst.aug_gain, rng)[0]
