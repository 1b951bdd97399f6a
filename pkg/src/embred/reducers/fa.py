"""Factor analysis fitted by expectation-maximization.

Model: x = loadings·z + mean + noise, z standard normal, noise diagonal.
All per-iteration algebra runs through the k x k matrix
M = I + loadings' psi^-1 loadings, so cost scales with the reduced
dimensionality rather than the input one. Initialization is a
deterministic PCA-based guess, so the fit takes no seed.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .base import FaParams, FitMeta, ReducerModel
from .pca import top_components

DEFAULT_ITERS = 200
DEFAULT_TOL = 1e-6
PSI_FLOOR = 1e-6


def _avg_loglik(s: np.ndarray, lam: np.ndarray, psi: np.ndarray) -> float:
    """Average per-sample Gaussian log-likelihood via the Woodbury forms."""
    d, k = lam.shape
    psi_inv_lam = lam / psi[:, None]
    m = np.eye(k) + lam.T @ psi_inv_lam
    sign, logdet_m = np.linalg.slogdet(m)
    if sign <= 0:
        raise ArithmeticError("posterior information matrix not positive definite")
    logdet = logdet_m + float(np.log(psi).sum())
    # tr(C^-1 S) with C = lam lam' + diag(psi)
    tr_psi = float(np.trace(s / psi[:, None]))
    g = psi_inv_lam.T @ s @ psi_inv_lam
    tr_corr = float(np.trace(np.linalg.solve(m, g)))
    return -0.5 * (d * np.log(2.0 * np.pi) + logdet + tr_psi - tr_corr)


def fit_fa(
    x, k: int, iters: int = DEFAULT_ITERS, tol: float = DEFAULT_TOL
) -> ReducerModel:
    """Fit the factor model; transform gives posterior factor means."""
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

    mean = x.mean(axis=0)
    xc = x - mean
    s = (xc.T @ xc) / n

    # spectral warm start: top directions scaled by signal above the
    # noise floor (mean of the discarded eigenvalues), residual variance
    # as noise; deterministic, so the fit takes no seed
    k0 = min(k, min(n - 1, d))
    evals, evecs = np.linalg.eigh(s)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    floor_var = float(evals[k0:].mean()) if k0 < d else 0.0
    lam = np.zeros((d, k))
    lam[:, :k0] = evecs[:, :k0] * np.sqrt(
        np.maximum(evals[:k0] - floor_var, PSI_FLOOR)
    )
    psi = np.maximum(np.diag(s) - (lam**2).sum(axis=1), PSI_FLOOR)

    clamps = 0
    trace = [_avg_loglik(s, lam, psi)]
    ran = 0
    for it in range(iters):
        psi_inv_lam = lam / psi[:, None]
        m = np.eye(k) + lam.T @ psi_inv_lam
        beta = np.linalg.solve(m, psi_inv_lam.T)
        beta_s = beta @ s
        # second moment of the factors aggregated over the sample
        ezz = np.linalg.inv(m) + beta_s @ beta.T
        lam = np.linalg.solve(ezz.T, beta_s).T
        psi_raw = np.diag(s) - np.einsum("ij,ji->i", lam, beta_s)
        clamps += int((psi_raw < PSI_FLOOR).sum())
        psi = np.maximum(psi_raw, PSI_FLOOR)
        trace.append(_avg_loglik(s, lam, psi))
        ran = it + 1
        rel = abs(trace[-1] - trace[-2]) / max(1.0, abs(trace[-2]))
        if rel < tol:
            break

    meta = FitMeta(
        n_pretrain_rows=n,
        seed=0,
        iterations_run=ran,
        final_objective=trace[-1],
        psi_clamps=clamps,
    )
    return ReducerModel("fa", d, k, FaParams(lam, psi, mean), meta, tuple(trace))
