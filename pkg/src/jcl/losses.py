"""Contrastive losses: per-pair InfoNCE, multi-key average, Monte-Carlo
infinite-key estimate and the closed-form Gaussian upper bound with its
query gradient.

Scalar entry points share the fixed-order kernels from :mod:`jcl.numerics`
so that degenerate cases (zero covariance, ``lam == 0``) agree bit for bit
across the closed form, the Monte-Carlo oracle and the plain pair loss.
:func:`contrastive_batch` is the vectorised path used by the trainer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from jcl.numerics import (
    as_matrix,
    as_vector,
    dot,
    dot_rows,
    is_psd,
    log_sum_exp_rows,
    quadratic_form,
    sample_gaussian,
)
from jcl.stats import PositiveKeyStats


@dataclass(frozen=True)
class LossParams:
    tau: float
    lam: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be positive and finite, got {self.tau}")
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lam must be non-negative and finite, got {self.lam}")


@dataclass(frozen=True)
class ContrastiveInstance:
    query: np.ndarray
    pos_stats: PositiveKeyStats
    negatives: np.ndarray

    def __post_init__(self):
        q = as_vector(self.query, "query")
        d = q.shape[0]
        neg = _negatives(self.negatives, d)
        if self.pos_stats.mu.shape != (d,) or self.pos_stats.sigma.shape != (d, d):
            raise ValueError("positive statistics do not match the query dimension")
        object.__setattr__(self, "query", q)
        object.__setattr__(self, "negatives", neg)


class LossResult(NamedTuple):
    value: float
    grad_query: np.ndarray


def _check_tau(tau: float) -> None:
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")


def _negatives(negatives, d: int) -> np.ndarray:
    if negatives is None or np.size(negatives) == 0:
        return np.zeros((0, d))
    neg = np.asarray(negatives, dtype=np.float64)
    if neg.ndim != 2 or neg.shape[1] != d:
        raise ValueError(f"negatives must have shape (K, {d}), got {neg.shape}")
    return neg


def pair_loss(q, k_pos, negatives, tau: float) -> float:
    """-log softmax of the positive logit against the negative logits."""
    _check_tau(tau)
    q = as_vector(q, "q")
    k_pos = as_vector(k_pos, "k_pos")
    if k_pos.shape != q.shape:
        raise ValueError("query and positive key dimensions differ")
    neg = _negatives(negatives, q.shape[0])
    s = dot(q, k_pos) / tau
    return float(log_sum_exp_rows(np.zeros(1), dot_rows(neg, q) / tau - s)[0])


def info_nce_batch(instances: Sequence[tuple], tau: float) -> float:
    if len(instances) == 0:
        raise ValueError("empty batch")
    total = 0.0
    for q, k_pos, negatives in instances:
        total += pair_loss(q, k_pos, negatives, tau)
    return total / len(instances)


def vanilla_multi_key_loss(q, keys, negatives, tau: float) -> float:
    keys = np.asarray(keys, dtype=np.float64)
    if keys.ndim != 2 or keys.shape[0] == 0:
        raise ValueError("need at least one positive key")
    total = 0.0
    for k in keys:
        total += pair_loss(q, k, negatives, tau)
    return total / keys.shape[0]


def _mean_and_stderr(x: np.ndarray) -> tuple[float, float]:
    # Shifting by the first draw keeps a constant sample's mean and spread exact.
    dev = x - x[0]
    mean = float(x[0] + np.sum(dev) / x.shape[0])
    if x.shape[0] < 2:
        return mean, math.nan
    return mean, float(np.std(dev, ddof=1) / math.sqrt(x.shape[0]))


def monte_carlo_inf_loss(
    inst: ContrastiveInstance, params: LossParams, samples: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Sample positive keys from N(mu, lam * sigma) and average the pair loss.

    Returns ``(mean, std_err)``; ``std_err`` is NaN for a single sample.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    q = inst.query
    keys = sample_gaussian(inst.pos_stats.mu, params.lam * inst.pos_stats.sigma, rng, size=samples)
    s = dot_rows(keys, q) / params.tau
    neg_logits = dot_rows(inst.negatives, q) / params.tau
    losses = log_sum_exp_rows(np.zeros_like(s), neg_logits[None, :] - s[:, None])
    return _mean_and_stderr(losses)


def jcl_components(q, mu, sigma, negatives, tau: float, lam: float) -> tuple[float, float, np.ndarray]:
    """Return (a, c, negative logits) with a = q.mu/tau and c = lam/(2 tau^2) q'Sq."""
    a = dot(q, mu) / tau
    c = lam / (2.0 * tau * tau) * quadratic_form(q, sigma)
    return a, c, dot_rows(negatives, q) / tau


def jcl_from_components(a: float, c: float, neg_mass: float) -> float:
    """The closed-form loss as a function of a, c and sum_j exp(q.k_j/tau)."""
    log_neg = math.log(neg_mass) if neg_mass > 0 else -math.inf
    return float(np.logaddexp(a + c, log_neg) - a)


def jcl_loss(inst: ContrastiveInstance, params: LossParams) -> LossResult:
    """Closed-form upper bound of the infinite-positive-key loss and its query gradient.

    value = log[exp(a + c) + sum_j exp(n_j)] - a with a = q.mu/tau,
    c = lam/(2 tau^2) q'Sq, n_j = q.k_j/tau, evaluated as
    log[exp(c) + sum_j exp(n_j - a)] so no large terms cancel. Writing p for
    the softmax over (a + c, n_1..n_K):

        grad = p_0 (mu/tau + lam/tau^2 S q) + sum_j p_j k_j / tau - mu/tau
    """
    tau, lam = params.tau, params.lam
    q = inst.query
    mu = inst.pos_stats.mu
    sigma = inst.pos_stats.sigma
    neg = inst.negatives
    a, c, neg_logits = jcl_components(q, mu, sigma, neg, tau, lam)
    shifted = neg_logits - a
    value = float(log_sum_exp_rows(np.array([c]), shifted)[0])
    if not math.isfinite(value):
        raise FloatingPointError(f"non-finite loss (a={a}, c={c})")
    p0 = math.exp(c - value)
    p_neg = np.exp(shifted - value)
    grad = p0 * (mu / tau + (lam / (tau * tau)) * dot_rows(sigma, q)) + p_neg @ neg / tau - mu / tau
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite gradient")
    return LossResult(value, grad)


def jcl_batch_loss(
    instances: Sequence[ContrastiveInstance], params: LossParams
) -> tuple[float, list[np.ndarray]]:
    if len(instances) == 0:
        raise ValueError("empty batch")
    n = len(instances)
    total = 0.0
    grads = []
    for inst in instances:
        res = jcl_loss(inst, params)
        total += res.value
        grads.append(res.grad_query / n)
    return total / n, grads


def gaussian_mgf_expectation(a, mu, S) -> float:
    """log E[exp(a'x)] for x ~ N(mu, S)."""
    a = as_vector(a, "a")
    mu = as_vector(mu, "mu")
    S = as_matrix(S, a.shape[0], "S")
    if not is_psd(S):
        raise ValueError("covariance is not positive semidefinite")
    return dot(a, mu) + 0.5 * quadratic_form(a, S)


def contrastive_batch(
    Q: np.ndarray,
    MU: np.ndarray,
    SIGMA: np.ndarray | None,
    NEG: np.ndarray,
    tau: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised closed-form loss for a batch.

    Q, MU are (N, d); SIGMA is (N, d, d) or None (treated as zero); NEG is
    the shared (K, d) negative set. Returns per-instance losses (N,) and
    per-instance query gradients (N, d), both unscaled by 1/N.
    With SIGMA None this is exactly the single-key pair loss with k+ = MU.
    """
    _check_tau(tau)
    a = np.sum(Q * MU, axis=1) / tau
    if SIGMA is None:
        Sq = np.zeros_like(Q)
    else:
        Sq = np.einsum("nab,nb->na", SIGMA, Q)
    c = lam / (2.0 * tau * tau) * np.sum(Q * Sq, axis=1)
    logits = np.concatenate([c[:, None], Q @ NEG.T / tau - a[:, None]], axis=1)
    m = logits.max(axis=1, keepdims=True)
    values = m[:, 0] + np.log(np.sum(np.exp(logits - m), axis=1))
    P = np.exp(logits - values[:, None])
    grads = P[:, :1] * (MU / tau + (lam / (tau * tau)) * Sq) + P[:, 1:] @ NEG / tau - MU / tau
    return values, grads
