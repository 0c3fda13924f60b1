"""Randomised property suites for the closed-form loss.

Each suite draws its own instances and compares the closed form against an
independent route: Monte-Carlo sampling of the positive key, the plain pair
loss, or central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from jcl.losses import (
    ContrastiveInstance,
    LossParams,
    jcl_loss,
    monte_carlo_inf_loss,
    pair_loss,
)
from jcl.stats import PositiveKeyStats, compute_covariance


@dataclass
class SuiteResult:
    suite: str
    trials: int
    passed: int
    worst: float
    tolerance: float
    note: str = ""

    @property
    def failed(self) -> int:
        return self.trials - self.passed

    @property
    def ok(self) -> bool:
        return self.passed == self.trials


def _unit(rng: np.random.Generator, shape) -> np.ndarray:
    x = rng.standard_normal(shape)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def random_instance(
    rng: np.random.Generator,
    d_max: int = 16,
    k_max: int = 32,
    zero_sigma: bool = False,
) -> tuple[ContrastiveInstance, LossParams]:
    """Unit query and negatives; positive statistics from a small cloud of unit keys.

    d starts at 2: in one dimension every unit vector is +-1, negatives can
    coincide with the mean, and the true gradient is zero to rounding.
    """
    d = int(rng.integers(2, d_max + 1))
    k = int(rng.integers(0, k_max + 1))
    m = int(rng.integers(1, 2 * d + 3))
    centre = _unit(rng, d)
    spread = rng.uniform(0.0, 1.0)
    keys = centre + spread * rng.standard_normal((m, d))
    keys /= np.maximum(np.linalg.norm(keys, axis=1, keepdims=True), 1e-12)
    stats = compute_covariance(keys)
    if zero_sigma:
        stats = PositiveKeyStats(stats.mu, np.zeros((d, d)), stats.count)
    inst = ContrastiveInstance(_unit(rng, d), stats, _unit(rng, (k, d)).reshape(k, d))
    params = LossParams(tau=float(rng.uniform(0.1, 1.0)), lam=float(rng.uniform(0.0, 4.0)))
    return inst, params


def jensen_suite(trials: int, rng: np.random.Generator, samples: int = 100_000) -> SuiteResult:
    """Monte-Carlo mean <= closed form + 3 std errors; worst is the smallest slack."""
    passed, worst = 0, np.inf
    for _ in range(trials):
        inst, params = random_instance(rng)
        mean, se = monte_carlo_inf_loss(inst, params, samples, rng)
        slack = jcl_loss(inst, params).value + 3.0 * se - mean
        passed += int(slack >= 0)
        worst = min(worst, slack)
    return SuiteResult("jensen_bound", trials, passed, float(worst), 0.0, f"samples={samples}")


def tightness_suite(trials: int, rng: np.random.Generator, samples: int = 1000, tol: float = 1e-12) -> SuiteResult:
    passed, worst = 0, 0.0
    for _ in range(trials):
        inst, params = random_instance(rng, zero_sigma=True)
        mean, _ = monte_carlo_inf_loss(inst, params, samples, rng)
        gap = abs(mean - jcl_loss(inst, params).value)
        passed += int(gap <= tol)
        worst = max(worst, gap)
    return SuiteResult("tightness", trials, passed, worst, tol)


def reduction_suite(trials: int, rng: np.random.Generator, tol: float = 1e-12) -> SuiteResult:
    passed, worst = 0, 0.0
    for _ in range(trials):
        inst, params = random_instance(rng)
        params = LossParams(params.tau, 0.0)
        closed = jcl_loss(inst, params).value
        plain = pair_loss(inst.query, inst.pos_stats.mu, inst.negatives, params.tau)
        rel = abs(closed - plain) / max(abs(plain), np.finfo(float).tiny)
        passed += int(rel <= tol)
        worst = max(worst, rel)
    return SuiteResult("reduction", trials, passed, worst, tol)


def finite_difference_grad(inst: ContrastiveInstance, params: LossParams, h: float = 1e-6) -> np.ndarray:
    q = inst.query
    grad = np.zeros_like(q)
    for i in range(q.shape[0]):
        e = np.zeros_like(q)
        e[i] = h
        up = ContrastiveInstance(q + e, inst.pos_stats, inst.negatives)
        down = ContrastiveInstance(q - e, inst.pos_stats, inst.negatives)
        grad[i] = (jcl_loss(up, params).value - jcl_loss(down, params).value) / (2 * h)
    return grad


def gradient_relative_error(inst: ContrastiveInstance, params: LossParams, h: float = 1e-6) -> float:
    analytic = jcl_loss(inst, params).grad_query
    numeric = finite_difference_grad(inst, params, h)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / scale)


def worked_example() -> tuple[ContrastiveInstance, LossParams]:
    """q = mu = e1, Sigma = I, lam = 4, tau = 0.2, one orthogonal negative; exponent 55."""
    stats = PositiveKeyStats(np.array([1.0, 0.0]), np.eye(2), 1)
    inst = ContrastiveInstance(np.array([1.0, 0.0]), stats, np.array([[0.0, 1.0]]))
    return inst, LossParams(tau=0.2, lam=4.0)


def gradient_suite(trials: int, rng: np.random.Generator, h: float = 1e-6, tol: float = 1e-5) -> SuiteResult:
    """Random instances plus the large-exponent worked example as the final trial."""
    passed, worst = 0, 0.0
    for t in range(trials):
        inst, params = worked_example() if t == trials - 1 else random_instance(rng)
        err = gradient_relative_error(inst, params, h)
        passed += int(err < tol)
        worst = max(worst, err)
    return SuiteResult("gradient_check", trials, passed, worst, tol, f"h={h}")


def run_all(trials: int, seed: int, samples: int = 100_000) -> list[SuiteResult]:
    streams = np.random.SeedSequence(seed).spawn(4)
    gens = [np.random.Generator(np.random.PCG64(s)) for s in streams]
    return [
        jensen_suite(trials, gens[0], samples),
        tightness_suite(trials, gens[1]),
        reduction_suite(trials, gens[2]),
        gradient_suite(trials, gens[3]),
    ]
