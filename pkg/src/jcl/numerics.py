"""Dense float64 primitives shared by the losses, statistics and trainer.

Reductions that feed bit-exact comparisons (``dot``, ``log_sum_exp`` and their
row-wise variants) accumulate strictly left to right. Scalar entry points are
thin wrappers over the row-wise kernels so the scalar and vectorised paths
produce identical bits on identical inputs.
"""

from __future__ import annotations

import numpy as np

PSD_SHIFT = 1e-10


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator; the stream is fixed by numpy's versioned bit generator."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def as_vector(v, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_matrix(S, d: int | None = None, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(S, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise ValueError(f"{name} has dimension {arr.shape[0]}, expected {d}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def dot_rows(rows: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``rows @ v`` with each row accumulated left to right over coordinates."""
    rows = np.asarray(rows, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if rows.shape[-1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: {rows.shape[-1]} vs {v.shape[0]}")
    acc = np.zeros(rows.shape[:-1], dtype=np.float64)
    for i in range(v.shape[0]):
        acc = acc + rows[..., i] * v[i]
    return acc


def dot(a, b) -> float:
    a = as_vector(a, "a")
    b = as_vector(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(dot_rows(a[None, :], b)[0])


def l2_normalize(v) -> np.ndarray:
    v = as_vector(v, "v")
    norm = np.sqrt(dot(v, v))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / norm


def log_sum_exp_rows(first: np.ndarray, rest: np.ndarray) -> np.ndarray:
    """log(exp(first[n]) + sum_j exp(rest[n, j])) row by row.

    ``rest`` is (n, K), or (K,) when every row shares the same terms. Columns
    are accumulated left to right after subtracting the row maximum.
    """
    first = np.asarray(first, dtype=np.float64)
    rest = np.asarray(rest, dtype=np.float64)
    if rest.ndim == 1:
        rest = rest[None, :]
    m = first
    if rest.shape[-1]:
        m = np.maximum(first, rest.max(axis=-1))
    acc = np.exp(first - m)
    for j in range(rest.shape[-1]):
        acc = acc + np.exp(rest[..., j] - m)
    return m + np.log(acc)


def log_sum_exp(terms) -> float:
    t = np.asarray(terms, dtype=np.float64).reshape(-1)
    if t.size == 0:
        raise ValueError("log_sum_exp of an empty sequence")
    if not np.all(np.isfinite(t)):
        raise ValueError("log_sum_exp needs finite terms")
    if t.size == 1:
        return float(t[0])
    return float(log_sum_exp_rows(t[:1], t[1:])[0])


def quadratic_form(q, S) -> float:
    q = as_vector(q, "q")
    S = as_matrix(S, q.shape[0], "S")
    return dot(q, dot_rows(S, q))


def is_symmetric(S: np.ndarray) -> bool:
    diff = np.abs(S - S.T)
    return bool(np.all(diff <= 1e-12 * np.maximum(1.0, np.abs(S))))


def is_psd(S, shift: float = PSD_SHIFT) -> bool:
    """Symmetric, finite, and Cholesky-factorable after adding ``shift`` to the diagonal."""
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or not np.all(np.isfinite(S)):
        return False
    if not is_symmetric(S):
        return False
    try:
        np.linalg.cholesky(S + shift * np.eye(S.shape[0]))
    except np.linalg.LinAlgError:
        return False
    return True


def psd_factor(S, tol: float = 1e-12) -> np.ndarray:
    """Pivoted outer-product Cholesky returning L (d x r) with L @ L.T ~= S.

    Rank-deficient directions are dropped once the largest remaining pivot
    is below ``tol * max(1, max diag)``, so exactly-zero variance
    coordinates stay exactly zero in samples.
    """
    S = as_matrix(S, name="S")
    if not is_psd(S):
        raise ValueError("covariance is not positive semidefinite")
    d = S.shape[0]
    resid = 0.5 * (S + S.T)
    cut = tol * max(1.0, float(np.max(np.diag(S), initial=0.0)))
    cols = []
    for _ in range(d):
        diag = np.diag(resid)
        j = int(np.argmax(diag))
        if diag[j] <= cut:
            break
        col = resid[:, j] / np.sqrt(diag[j])
        cols.append(col)
        resid = resid - np.outer(col, col)
    if not cols:
        return np.zeros((d, 0))
    return np.stack(cols, axis=1)


def sample_gaussian(mu, S, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw from N(mu, S); returns shape (d,) or (size, d)."""
    mu = as_vector(mu, "mu")
    L = psd_factor(as_matrix(S, mu.shape[0], "S"))
    n = 1 if size is None else int(size)
    z = rng.standard_normal((n, L.shape[1]))
    x = mu + z @ L.T
    return x[0] if size is None else x
