"""Nonnegative matrix factorization by multiplicative updates.

Real-valued embeddings are made nonnegative with a per-column shift
learned at fit time (shift_j = max(0, -min_j)); the shift is stored in
the model and re-applied before projecting unseen rows. Denominators in
the updates are floored at a tiny constant, which preserves the
non-increasing objective property the tests assert.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .base import FitMeta, NmfParams, ReducerModel

DEFAULT_ITERS = 300
PROJECT_ITERS = 200
_EPS = 1e-12


def _frobenius(x: np.ndarray, w: np.ndarray, h: np.ndarray) -> float:
    return float(np.linalg.norm(x - w @ h) ** 2)


def fit_nmf(x, k: int, iters: int = DEFAULT_ITERS, seed: int = 0) -> ReducerModel:
    """Factorize shifted pretrain data as W·H and keep the dictionary H."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ConfigError(f"pretrain data must be a 2-D matrix, got shape {x.shape}")
    n, d = x.shape
    if n < 2:
        raise ConfigError(f"need at least 2 pretrain rows, got {n}")
    if not 1 <= k <= d:
        raise ConfigError(f"k must lie in [1, dims], got {k}")
    if iters < 1:
        raise ConfigError("iters must be positive")

    shift = np.maximum(0.0, -x.min(axis=0))
    xs = x + shift

    rng = np.random.default_rng(seed)
    scale = max(float(xs.mean()), _EPS)
    w = rng.uniform(0.0, scale, size=(n, k))
    h = rng.uniform(0.0, scale, size=(k, d))

    trace = [_frobenius(xs, w, h)]
    for _ in range(iters):
        h *= (w.T @ xs) / np.maximum(w.T @ w @ h, _EPS)
        w *= (xs @ h.T) / np.maximum(w @ h @ h.T, _EPS)
        trace.append(_frobenius(xs, w, h))

    meta = FitMeta(
        n_pretrain_rows=n,
        seed=seed,
        iterations_run=iters,
        final_objective=trace[-1],
    )
    return ReducerModel("nmf", d, k, NmfParams(h, shift), meta, tuple(trace))


def project_nonneg(
    v: np.ndarray, h: np.ndarray, iters: int = PROJECT_ITERS
) -> np.ndarray:
    """Nonnegative least-squares coefficients of rows of v against H.

    Fixed-budget multiplicative updates with a deterministic uniform
    start, so projection involves no randomness.
    """
    v = np.atleast_2d(np.asarray(v, dtype=np.float64))
    k = h.shape[0]
    w = np.full((v.shape[0], k), max(float(v.mean()), _EPS))
    hht = h @ h.T
    vht = v @ h.T
    for _ in range(iters):
        w *= vht / np.maximum(w @ hht, _EPS)
    return w
