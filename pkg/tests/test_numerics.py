import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from jcl.numerics import (
    dot,
    is_psd,
    l2_normalize,
    log_sum_exp,
    make_rng,
    psd_factor,
    quadratic_form,
    sample_gaussian,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@pytest.mark.parametrize(
    "a, b, expected",
    [([1, 0], [0, 1], 0.0), ([1, 0], [1, 0], 1.0), ([0.5, 0.5], [0.5, -0.5], 0.0)],
)
def test_dot_examples(a, b, expected):
    assert dot(a, b) == expected


def test_dot_dimension_mismatch():
    with pytest.raises(ValueError):
        dot([1.0, 2.0], [1.0])


def test_dot_is_left_to_right():
    # (1e16 + 1) - 1e16 loses the 1 when accumulated in order.
    assert dot([1e16, 1.0, -1e16], [1.0, 1.0, 1.0]) == 0.0


@given(st.integers(1, 8).flatmap(lambda d: st.tuples(*(arrays(np.float64, d, elements=finite) for _ in range(3)))))
def test_dot_symmetric_and_linear(vs):
    a, b, c = vs
    assert dot(a, b) == dot(b, a)
    lhs = dot(a + c, b)
    rhs = dot(a, b) + dot(c, b)
    scale = np.sum(np.abs(a) * np.abs(b)) + np.sum(np.abs(c) * np.abs(b)) + 1.0
    assert abs(lhs - rhs) <= 1e-12 * scale


@pytest.mark.parametrize(
    "v, expected", [([3, 4], [0.6, 0.8]), ([1, 0], [1, 0]), ([2, 0, 0], [1, 0, 0])]
)
def test_l2_normalize_examples(v, expected):
    out = l2_normalize(v)
    np.testing.assert_allclose(out, expected, atol=1e-15)
    assert abs(np.linalg.norm(out) - 1) <= 1e-9


def test_l2_normalize_zero_vector():
    with pytest.raises(ValueError):
        l2_normalize([0.0, 0.0])


def test_log_sum_exp_examples():
    assert log_sum_exp([3.25]) == 3.25
    assert log_sum_exp([0.0, 0.0]) == pytest.approx(math.log(2), abs=1e-15)
    assert log_sum_exp([1000.0, 1000.0]) == pytest.approx(1000 + math.log(2), abs=1e-12)
    with pytest.raises(ValueError):
        log_sum_exp([])


@given(arrays(np.float64, st.integers(1, 10), elements=finite), st.floats(-500, 500))
def test_log_sum_exp_shift_invariant(t, c):
    assert log_sum_exp(t + c) == pytest.approx(log_sum_exp(t) + c, abs=1e-12 * max(1.0, abs(c), np.max(np.abs(t))))


@given(arrays(np.float64, st.integers(2, 10), elements=finite), st.integers(0, 9), st.floats(0.0, 10.0))
def test_log_sum_exp_monotone(t, i, bump):
    i = i % t.shape[0]
    up = t.copy()
    up[i] += bump
    assert log_sum_exp(up) >= log_sum_exp(t)


def test_quadratic_form_examples():
    assert quadratic_form([1, 0], np.eye(2)) == 1.0
    assert quadratic_form([0.3, -2.0], np.zeros((2, 2))) == 0.0
    S = np.array([[0.25, -0.25], [-0.25, 0.25]])
    assert quadratic_form([1, 1], S) == 0.0
    with pytest.raises(ValueError):
        quadratic_form([1, 0, 0], np.eye(2))


def test_quadratic_form_nonnegative_on_psd(rng):
    for _ in range(200):
        d = int(rng.integers(1, 10))
        A = rng.standard_normal((d, int(rng.integers(1, d + 1))))
        S = A @ A.T
        q = rng.standard_normal(d)
        assert is_psd(S)
        assert quadratic_form(q, S) >= -1e-10 * (q @ q)


def test_is_psd():
    assert is_psd(np.zeros((3, 3)))
    assert is_psd(np.eye(2))
    assert not is_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert not is_psd(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_psd_factor_reconstructs(rng):
    A = rng.standard_normal((6, 3))
    S = A @ A.T
    L = psd_factor(S)
    assert L.shape[1] == 3
    np.testing.assert_allclose(L @ L.T, S, atol=1e-12)


def test_sample_gaussian_degenerate_is_exact():
    mu = np.array([0.7, -1.3, 2.0])
    x = sample_gaussian(mu, np.zeros((3, 3)), make_rng(0), size=50)
    assert np.array_equal(x, np.broadcast_to(mu, x.shape))
    y = sample_gaussian([1.0, 2.0], np.diag([4.0, 0.0]), make_rng(1), size=1000)
    assert np.all(y[:, 1] == 2.0)
    assert y[:, 0].std() > 1.0


def test_sample_gaussian_moments():
    x = sample_gaussian([0.0, 0.0], np.eye(2), make_rng(7), size=100_000)
    assert np.all(np.abs(x.mean(axis=0)) < 0.02)
    np.testing.assert_allclose(np.cov(x.T), np.eye(2), atol=0.02)


def test_sample_gaussian_rejects_non_psd():
    with pytest.raises(ValueError):
        sample_gaussian([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]], make_rng(0))


def test_sample_gaussian_reproducible():
    S = np.array([[2.0, 0.3], [0.3, 0.5]])
    a = sample_gaussian([1.0, 0.0], S, make_rng(99), size=10)
    b = sample_gaussian([1.0, 0.0], S, make_rng(99), size=10)
    assert np.array_equal(a, b)
