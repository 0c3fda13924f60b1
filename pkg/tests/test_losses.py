import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from jcl.losses import (
    ContrastiveInstance,
    LossParams,
    contrastive_batch,
    gaussian_mgf_expectation,
    info_nce_batch,
    jcl_batch_loss,
    jcl_components,
    jcl_from_components,
    jcl_loss,
    monte_carlo_inf_loss,
    pair_loss,
    vanilla_multi_key_loss,
)
from jcl.numerics import make_rng
from jcl.stats import PositiveKeyStats, compute_covariance
from jcl.verification import finite_difference_grad, random_instance, worked_example

E1, E2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])


def instance(q, mu, sigma, negatives):
    mu = np.asarray(mu, dtype=float)
    return ContrastiveInstance(np.asarray(q, dtype=float), PositiveKeyStats(mu, np.asarray(sigma, dtype=float), 1), negatives)


class TestPairLoss:
    def test_no_negatives_is_zero(self):
        assert pair_loss([0.3, -0.4], [1.0, 2.0], [], 0.7) == 0.0

    def test_symmetric_two_class(self):
        assert pair_loss(E1, E2, [E2], 1.0) == pytest.approx(math.log(2), abs=1e-15)

    def test_hand_value(self):
        # -log(e^5 / (e^5 + e^0)) = log(1 + e^-5)
        assert pair_loss(E1, E1, [E2], 0.2) == pytest.approx(math.log1p(math.exp(-5.0)), rel=1e-13)

    def test_rejects_bad_tau(self):
        with pytest.raises(ValueError):
            pair_loss(E1, E1, [E2], 0.0)

    def test_nonnegative(self, rng):
        for _ in range(200):
            d = int(rng.integers(1, 6))
            q, k = rng.standard_normal(d) * 5, rng.standard_normal(d) * 5
            assert pair_loss(q, k, rng.standard_normal((int(rng.integers(0, 5)), d)), 0.1) >= 0.0


def test_info_nce_batch():
    inst = (E1, E1, [E2])
    single = pair_loss(*inst, 0.2)
    assert info_nce_batch([inst], 0.2) == single
    assert info_nce_batch([inst, inst], 0.2) == pytest.approx(single, rel=1e-15)
    a, b = math.log1p(math.exp(-5.0)), math.log(2)
    assert info_nce_batch([inst, (E1, E2, [E2])], 0.2) == pytest.approx((a + b) / 2, rel=1e-13)
    with pytest.raises(ValueError):
        info_nce_batch([], 0.2)


def test_vanilla_multi_key():
    assert vanilla_multi_key_loss(E1, [E1], [E2], 0.2) == pair_loss(E1, E1, [E2], 0.2)
    assert vanilla_multi_key_loss(E1, [E1, E1, E1], [E2], 0.2) == pytest.approx(pair_loss(E1, E1, [E2], 0.2), rel=1e-15)
    a, b = math.log1p(math.exp(-5.0)), math.log(2)
    assert vanilla_multi_key_loss(E1, [E1, E2], [E2], 0.2) == pytest.approx((a + b) / 2, rel=1e-13)
    with pytest.raises(ValueError):
        vanilla_multi_key_loss(E1, np.zeros((0, 2)), [E2], 0.2)


class TestClosedForm:
    def test_worked_example(self):
        inst, params = worked_example()
        res = jcl_loss(inst, params)
        assert res.value == pytest.approx(50.0 + math.log1p(math.exp(-55.0)), abs=1e-9)
        assert np.all(np.isfinite(res.grad_query))

    def test_lambda_zero_reduces_to_pair_loss(self, rng):
        for _ in range(100):
            inst, params = random_instance(rng)
            p0 = LossParams(params.tau, 0.0)
            plain = pair_loss(inst.query, inst.pos_stats.mu, inst.negatives, p0.tau)
            assert jcl_loss(inst, p0).value == pytest.approx(plain, rel=1e-12, abs=0)

    def test_no_negatives_no_covariance_is_zero(self, rng):
        inst = instance(rng.standard_normal(3), rng.standard_normal(3), np.eye(3), [])
        assert jcl_loss(inst, LossParams(0.5, 0.0)).value == 0.0

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            LossParams(0.0, 1.0)
        with pytest.raises(ValueError):
            LossParams(0.2, -1.0)

    def test_extreme_exponents_stay_finite(self):
        # exponent ~ 700: plain exp() would overflow
        inst = instance(E1, E1, np.eye(2), [E2])
        res = jcl_loss(inst, LossParams(tau=0.05, lam=3.4))
        assert math.isfinite(res.value) and np.all(np.isfinite(res.grad_query))

    def test_components_form_agrees(self, rng):
        for _ in range(50):
            inst, params = random_instance(rng)
            a, c, n = jcl_components(inst.query, inst.pos_stats.mu, inst.pos_stats.sigma, inst.negatives, params.tau, params.lam)
            mass = float(np.sum(np.exp(n)))
            assert jcl_from_components(a, c, mass) == pytest.approx(jcl_loss(inst, params).value, rel=1e-12, abs=1e-12)

    def test_gradient_finite_differences(self, rng):
        for _ in range(30):
            inst, params = random_instance(rng)
            g = jcl_loss(inst, params).grad_query
            np.testing.assert_allclose(g, finite_difference_grad(inst, params), rtol=1e-5, atol=1e-7)

    def test_upper_bounds_monte_carlo(self, rng):
        for _ in range(10):
            inst, params = random_instance(rng, d_max=6, k_max=8)
            mean, se = monte_carlo_inf_loss(inst, params, 20_000, rng)
            assert mean <= jcl_loss(inst, params).value + 3 * se


class TestMonteCarlo:
    def test_degenerate_equals_pair_loss_exactly(self, rng):
        inst = instance(E1, [0.6, 0.8], np.zeros((2, 2)), [E2, -E1])
        for params in (LossParams(0.2, 4.0), LossParams(0.7, 0.0)):
            mean, se = monte_carlo_inf_loss(inst, params, 500, rng)
            assert mean == pair_loss(E1, [0.6, 0.8], [E2, -E1], params.tau) == jcl_loss(inst, params).value
            assert se == 0.0

    def test_lambda_zero_ignores_sigma(self, rng):
        inst = instance(E1, [0.6, 0.8], np.eye(2), [E2])
        mean, se = monte_carlo_inf_loss(inst, LossParams(0.3, 0.0), 100, rng)
        assert mean == pair_loss(E1, [0.6, 0.8], [E2], 0.3) and se == 0.0

    def test_reproducible(self):
        inst, params = worked_example()
        a = monte_carlo_inf_loss(inst, params, 1000, make_rng(3))
        b = monte_carlo_inf_loss(inst, params, 1000, make_rng(3))
        assert a == b

    def test_worked_example_below_bound(self):
        inst, params = worked_example()
        mean, se = monte_carlo_inf_loss(inst, params, 100_000, make_rng(11))
        assert mean <= 50.0 + 3 * se


def test_jcl_batch_loss(rng):
    inst, params = worked_example()
    single = jcl_loss(inst, params)
    value, grads = jcl_batch_loss([inst], params)
    assert value == single.value
    np.testing.assert_array_equal(grads[0], single.grad_query)
    value, grads = jcl_batch_loss([inst, inst], params)
    assert value == pytest.approx(single.value, rel=1e-15)
    np.testing.assert_allclose(grads[1], single.grad_query / 2, rtol=1e-15)
    other = instance(E1, E1, np.zeros((2, 2)), [E2])
    value, _ = jcl_batch_loss([inst, other], params)
    expected = (50.0 + math.log1p(math.exp(-55.0)) + math.log1p(math.exp(-5.0))) / 2
    assert value == pytest.approx(expected, rel=1e-13)
    with pytest.raises(ValueError):
        jcl_batch_loss([], params)


def test_vectorised_batch_matches_scalar(rng):
    n, d, k = 7, 5, 11
    Q = rng.standard_normal((n, d))
    Q /= np.linalg.norm(Q, axis=1, keepdims=True)
    keys = rng.standard_normal((n, 4, d))
    neg = rng.standard_normal((k, d))
    stats = [compute_covariance(keys[i]) for i in range(n)]
    MU = np.stack([s.mu for s in stats])
    SIGMA = np.stack([s.sigma for s in stats])
    params = LossParams(0.2, 4.0)
    values, grads = contrastive_batch(Q, MU, SIGMA, neg, params.tau, params.lam)
    for i in range(n):
        ref = jcl_loss(ContrastiveInstance(Q[i], stats[i], neg), params)
        assert values[i] == pytest.approx(ref.value, rel=1e-12)
        np.testing.assert_allclose(grads[i], ref.grad_query, rtol=1e-11, atol=1e-12)
    v0, g0 = contrastive_batch(Q, MU, None, neg, 0.2, 0.0)
    for i in range(n):
        assert v0[i] == pytest.approx(pair_loss(Q[i], MU[i], neg, 0.2), rel=1e-12)


class TestMGF:
    def test_examples(self):
        assert gaussian_mgf_expectation([0.3, 2.0], [1.0, -1.0], np.zeros((2, 2))) == pytest.approx(0.3 - 2.0, abs=1e-15)
        assert gaussian_mgf_expectation(E1, [0.0, 0.0], np.eye(2)) == 0.5

    def test_rejects_non_psd(self):
        with pytest.raises(ValueError):
            gaussian_mgf_expectation(E1, [0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])


@settings(max_examples=200, deadline=None)
@given(
    a=st.floats(-20, 20),
    c=st.floats(0, 20),
    log_mass=st.floats(-10, 10),
)
def test_monotonicity_in_components(a, c, log_mass):
    # Keep the positive and negative terms within e^20 of each other so the
    # one-sided differences are representable in float64.
    assume(abs(a + c - log_mass) <= 20)
    mass = math.exp(log_mass)
    base = jcl_from_components(a, c, mass)
    eps = 1e-3
    assert jcl_from_components(a + eps, c, mass) < base
    assert jcl_from_components(a, c + eps, mass) > base
    assert jcl_from_components(a, c, mass * (1 + eps)) > base
