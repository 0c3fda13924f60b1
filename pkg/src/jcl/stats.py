"""Per-instance positive-key statistics: mean and biased (1/M') covariance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from jcl.numerics import is_psd


@dataclass(frozen=True)
class PositiveKeyStats:
    mu: np.ndarray
    sigma: np.ndarray
    count: int

    @property
    def d(self) -> int:
        return self.mu.shape[0]


def _as_keys(keys) -> np.ndarray:
    arr = np.asarray(keys, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("need a non-empty (M', d) array of keys")
    if not np.all(np.isfinite(arr)):
        raise ValueError("keys contain non-finite values")
    return arr


def compute_mean(keys) -> np.ndarray:
    keys = _as_keys(keys)
    return keys.sum(axis=0) / keys.shape[0]


def compute_covariance(keys) -> PositiveKeyStats:
    """Center the keys and form (1/M') sum of outer products.

    The divisor is M', not M'-1; a single key therefore yields a zero matrix.
    """
    keys = _as_keys(keys)
    m = keys.shape[0]
    mu = compute_mean(keys)
    centered = keys - mu
    sigma = centered.T @ centered / m
    sigma = 0.5 * (sigma + sigma.T)
    return PositiveKeyStats(mu=mu, sigma=sigma, count=m)


def batch_statistics(keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised means (N, d) and covariances (N, d, d) for keys of shape (N, M', d)."""
    keys = np.asarray(keys, dtype=np.float64)
    m = keys.shape[1]
    mu = keys.sum(axis=1) / m
    centered = keys - mu[:, None, :]
    sigma = np.einsum("nma,nmb->nab", centered, centered) / m
    sigma = 0.5 * (sigma + np.swapaxes(sigma, 1, 2))
    return mu, sigma


def stats_psd_check(stats: PositiveKeyStats) -> bool:
    return is_psd(stats.sigma)
