"""Bootstrapped evaluation of linear probes on a fixed train/test split.

Each replicate draws ``n_ta`` training users with replacement, z-scores
features with that replicate's own statistics, trains a linear model,
and scores it on the full test set. Replicate i seeds its sampler from
``derive_seed(seed, i)``, so results do not depend on how many other
replicates run or in what order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .corpus import TaskDataset
from .errors import ConfigError, DataError, DegenerateSampleError
from .linmod import DEFAULT_ETA, DEFAULT_LAMBDA, DEFAULT_T, predict, train
from .metrics import (
    DEFAULT_RELIABILITY_X,
    DEFAULT_RELIABILITY_Y,
    confidence_interval,
    disattenuated_r,
    macro_f1,
    pearson_r,
)
from .rng import SplitMix64, derive_seed

DEFAULT_REPLICATES = 10
ZSCORE_STD_FLOOR = 1e-12

_MODEL_FOR_KIND = {
    "continuous": "ridge",
    "binary": "logistic",
    "multiclass4": "multinomial4",
}
_CLASSES_FOR_KIND = {"binary": 2, "multiclass4": 4}


@dataclass(frozen=True)
class BootstrapResult:
    """One evaluated grid cell: a (task, method, k, n_ta) combination."""

    task_name: str
    method: str
    k: int
    n_ta: int
    scores: tuple[float, ...]
    mean: float
    std_error: float
    ci_low: float
    ci_high: float
    seed: int
    model_meta: Mapping[str, object]

    def __post_init__(self):
        if len(self.scores) < 2:
            raise DataError("a result needs at least 2 replicate scores")
        if self.std_error < 0:
            raise DataError("std_error must be nonnegative")
        if not self.ci_low <= self.mean <= self.ci_high:
            raise DataError(
                f"mean {self.mean} outside interval "
                f"({self.ci_low}, {self.ci_high})"
            )


def _zscore_stats(xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = xs.mean(axis=0)
    sd = xs.std(axis=0)
    sd = np.where(sd < ZSCORE_STD_FLOOR, 1.0, sd)
    return mu, sd


def _draw_indices(
    seed: int, replicate: int, n_train: int, n_ta: int, y: np.ndarray, kind: str
) -> list[int]:
    rng = SplitMix64(derive_seed(seed, replicate))
    idx = rng.sample_with_replacement(n_train, n_ta)
    if kind == "continuous" or np.unique(y[idx]).size > 1:
        return idx
    # one retry with a shifted stream before giving up on the replicate
    rng = SplitMix64(derive_seed(seed, replicate, 1))
    idx = rng.sample_with_replacement(n_train, n_ta)
    if np.unique(y[idx]).size > 1:
        return idx
    raise DegenerateSampleError(
        f"replicate {replicate} drew a single-class training sample twice "
        f"(n_ta={n_ta})"
    )


def bootstrap_eval(
    data: TaskDataset,
    n_ta: int,
    *,
    B: int = DEFAULT_REPLICATES,
    seed: int = 0,
    method: str = "none",
    lam: float = DEFAULT_LAMBDA,
    eta: float = DEFAULT_ETA,
    T: int = DEFAULT_T,
    ci: str = "t",
    disattenuate: bool = False,
    reliabilities: tuple[float, float] = (
        DEFAULT_RELIABILITY_X,
        DEFAULT_RELIABILITY_Y,
    ),
) -> BootstrapResult:
    """Evaluate one grid cell with B bootstrap replicates."""
    if n_ta < 1:
        raise ConfigError(f"n_ta must be at least 1, got {n_ta}")
    if B < 2:
        raise ConfigError(f"need at least 2 replicates, got {B}")
    if disattenuate and data.kind != "continuous":
        raise ConfigError("disattenuation applies to continuous tasks only")

    x_tr = np.asarray(data.train_features.matrix, dtype=np.float64)
    y_tr = data.train_outcomes.values_for(data.train_features.ids)
    x_te = np.asarray(data.test_features.matrix, dtype=np.float64)
    y_te = data.test_outcomes.values_for(data.test_features.ids)
    kind = data.kind
    model_kind = _MODEL_FOR_KIND[kind]

    scores: list[float] = []
    for i in range(B):
        idx = _draw_indices(seed, i, x_tr.shape[0], n_ta, y_tr, kind)
        xs, ys = x_tr[idx], y_tr[idx]
        mu, sd = _zscore_stats(xs)
        model = train((xs - mu) / sd, ys, model_kind, lam=lam, eta=eta, T=T)
        y_hat = predict(model, (x_te - mu) / sd)
        if kind == "continuous":
            score = pearson_r(y_te, y_hat)
            if disattenuate:
                score = disattenuated_r(score, *reliabilities)
        else:
            score = macro_f1(y_te, y_hat, _CLASSES_FOR_KIND[kind])
        scores.append(float(score))

    arr = np.array(scores)
    if arr.min() == arr.max():
        se = 0.0
    else:
        se = float(arr.std(ddof=1)) / float(np.sqrt(B))
    ci_low, ci_high = confidence_interval(arr, kind=ci)
    metric = (
        "disattenuated_r"
        if kind == "continuous" and disattenuate
        else ("pearson_r" if kind == "continuous" else "macro_f1")
    )
    meta = {"lambda": lam, "eta": eta, "T": T, "metric": metric, "ci": ci}
    if disattenuate:
        meta["reliabilities"] = tuple(reliabilities)
    return BootstrapResult(
        task_name=data.task_name,
        method=method,
        k=data.dims,
        n_ta=n_ta,
        scores=tuple(scores),
        mean=float(arr.mean()),
        std_error=se,
        ci_low=ci_low,
        ci_high=ci_high,
        seed=seed,
        model_meta=meta,
    )
