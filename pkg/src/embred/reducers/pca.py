"""Principal-component reduction and the mean/top-component post-processing.

Exact SVD is used up to 1024 input dimensions. Above that a randomized
range-finder (Gaussian sketch, oversampling 10, 4 re-orthonormalized
power iterations) approximates the top subspace; its agreement with the
dense route is a tested property. Component signs are normalized so the
entry of largest magnitude in each component is positive.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .base import FitMeta, PcaParams, PcaPpaParams, PpaParams, ReducerModel

EXACT_SVD_MAX_DIMS = 1024
OVERSAMPLING = 10
POWER_ITERATIONS = 4


def _as_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ConfigError(f"pretrain data must be a 2-D matrix, got shape {x.shape}")
    return x


def _fix_signs(components: np.ndarray) -> np.ndarray:
    out = components.copy()
    for row in out:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    return out


def _exact_top_k(xc: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    _, s, vt = np.linalg.svd(xc, full_matrices=False)
    return vt[:k], s[:k]


def _randomized_top_k(
    xc: np.ndarray, k: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    width = min(k + OVERSAMPLING, min(xc.shape))
    q = np.linalg.qr(xc @ rng.standard_normal((xc.shape[1], width)))[0]
    for _ in range(POWER_ITERATIONS):
        # re-orthonormalize both half-steps to keep the basis stable
        q = np.linalg.qr(xc.T @ q)[0]
        q = np.linalg.qr(xc @ q)[0]
    _, s, vt = np.linalg.svd(q.T @ xc, full_matrices=False)
    return vt[:k], s[:k]


def top_components(
    xc: np.ndarray, k: int, seed: int = 0, mode: str = "auto"
) -> tuple[np.ndarray, np.ndarray]:
    """Top-k right singular vectors (sign-fixed) and singular values."""
    if mode == "auto":
        mode = "exact" if xc.shape[1] <= EXACT_SVD_MAX_DIMS else "randomized"
    if mode == "exact":
        comps, s = _exact_top_k(xc, k)
    elif mode == "randomized":
        comps, s = _randomized_top_k(xc, k, seed)
    else:
        raise ConfigError(f"unknown svd mode {mode!r}")
    return _fix_signs(comps), s


def _check_pca_pre(x: np.ndarray, k: int) -> None:
    n, d = x.shape
    if n < 2:
        raise ConfigError(f"need at least 2 pretrain rows, got {n}")
    limit = min(n - 1, d)
    if not 1 <= k <= limit:
        raise ConfigError(
            f"k must lie in [1, min(rows-1, dims)] = [1, {limit}], got {k}"
        )


def fit_pca(x, k: int, seed: int = 0, mode: str = "auto") -> ReducerModel:
    """Fit mean-centered PCA keeping the top k components."""
    x = _as_matrix(x)
    _check_pca_pre(x, k)
    mean = x.mean(axis=0)
    xc = x - mean
    comps, svals = top_components(xc, k, seed, mode)
    residual = xc - (xc @ comps.T) @ comps
    meta = FitMeta(
        n_pretrain_rows=x.shape[0],
        seed=seed,
        iterations_run=0,
        final_objective=float(np.mean(residual**2)),
    )
    return ReducerModel(
        "pca", x.shape[1], k, PcaParams(mean, comps, svals), meta
    )


def fit_ppa_stage(x: np.ndarray, seed: int = 0, mode: str = "auto") -> PpaParams:
    """Fit one post-processing stage: mean plus top floor(dims/100) PCs."""
    x = _as_matrix(x)
    d = x.shape[1]
    mean = x.mean(axis=0)
    removed = d // 100
    if removed == 0:
        top = np.zeros((0, d))
    else:
        top, _ = top_components(x - mean, removed, seed, mode)
    return PpaParams(mean, top)


def fit_pca_ppa(x, k: int, seed: int = 0, mode: str = "auto") -> ReducerModel:
    """Post-process, reduce with PCA, post-process again.

    The first stage removes floor(in_dims/100) components, the second
    floor(k/100); each stage is fitted on the previous stage's output
    over the pretrain set.
    """
    x = _as_matrix(x)
    _check_pca_pre(x, k)
    ppa_in = fit_ppa_stage(x, seed, mode)
    x1 = ppa_in.apply(x)
    mean = x1.mean(axis=0)
    comps, svals = top_components(x1 - mean, k, seed, mode)
    pca = PcaParams(mean, comps, svals)
    x2 = pca.apply(x1)
    ppa_out = fit_ppa_stage(x2, seed, mode)
    residual = (x1 - mean) - ((x1 - mean) @ comps.T) @ comps
    meta = FitMeta(
        n_pretrain_rows=x.shape[0],
        seed=seed,
        iterations_run=0,
        final_objective=float(np.mean(residual**2)),
    )
    return ReducerModel(
        "pca_ppa", x.shape[1], k, PcaPpaParams(ppa_in, pca, ppa_out), meta
    )
