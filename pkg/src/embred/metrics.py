"""Scoring functions and the confidence interval used across reports.

The t-quantile needed for the interval is computed here from scratch via
the regularized incomplete beta function (continued fraction plus
bisection for the inverse), so the package has no runtime dependency on
a statistics library; tests cross-check it against an independent one.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, DataError, UndefinedMetricError

DEFAULT_RELIABILITY_X = 0.70
DEFAULT_RELIABILITY_Y = 0.77


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_ppf(p: float, df: int) -> float:
    """Quantile of Student's t with df degrees of freedom."""
    if not 0.0 < p < 1.0:
        raise ConfigError(f"quantile level must lie in (0,1), got {p}")
    if df < 1:
        raise ConfigError(f"degrees of freedom must be positive, got {df}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_ppf(1.0 - p, df)
    # tail area relates to I_z(df/2, 1/2) with z = df/(df + t^2)
    alpha = 2.0 * (1.0 - p)
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if betainc_reg(df / 2.0, 0.5, mid) < alpha:
            lo = mid
        else:
            hi = mid
    z = 0.5 * (lo + hi)
    return math.sqrt(df * (1.0 - z) / z)


def pearson_r(y: np.ndarray, y_hat: np.ndarray) -> float:
    """Sample Pearson correlation, two-pass formula."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape or y.ndim != 1:
        raise DataError(f"mismatched score vectors: {y.shape} vs {y_hat.shape}")
    if y.size < 2:
        raise UndefinedMetricError("correlation needs at least 2 points")
    a = y - y.mean()
    b = y_hat - y_hat.mean()
    denom = math.sqrt(float(a @ a) * float(b @ b))
    if denom == 0.0:
        raise UndefinedMetricError("correlation undefined for a constant vector")
    return float(a @ b) / denom


def disattenuated_r(
    r: float,
    r_xx: float = DEFAULT_RELIABILITY_X,
    r_yy: float = DEFAULT_RELIABILITY_Y,
) -> float:
    """Correlation corrected for instrument reliability; may exceed 1."""
    for name, value in (("r_xx", r_xx), ("r_yy", r_yy)):
        if not 0.0 < value <= 1.0:
            raise ConfigError(f"{name} must lie in (0, 1], got {value}")
    return r / math.sqrt(r_xx * r_yy)


def macro_f1(y: np.ndarray, y_hat: np.ndarray, n_classes: int) -> float:
    """Unweighted mean of per-class F1; an absent class contributes 0."""
    y = np.asarray(y)
    y_hat = np.asarray(y_hat)
    if y.shape != y_hat.shape or y.ndim != 1:
        raise DataError(f"mismatched label vectors: {y.shape} vs {y_hat.shape}")
    if n_classes < 2:
        raise ConfigError("n_classes must be at least 2")
    for name, v in (("labels", y), ("predictions", y_hat)):
        arr = np.asarray(v, dtype=np.float64)
        if not ((arr == np.floor(arr)) & (arr >= 0) & (arr < n_classes)).all():
            raise DataError(f"{name} must be integers in [0, {n_classes})")
    y = y.astype(np.int64)
    y_hat = y_hat.astype(np.int64)
    total = 0.0
    for cls in range(n_classes):
        tp = int(((y == cls) & (y_hat == cls)).sum())
        fp = int(((y != cls) & (y_hat == cls)).sum())
        fn = int(((y == cls) & (y_hat != cls)).sum())
        if 2 * tp + fp + fn == 0:
            continue  # absent class: F1 counts as 0
        total += 2 * tp / (2 * tp + fp + fn)
    return total / n_classes


def confidence_interval(
    scores, level: float = 0.95, kind: str = "t"
) -> tuple[float, float]:
    """Two-sided interval over replicate scores.

    "t": mean +/- t-quantile * stddev(ddof=1)/sqrt(B). "percentile":
    linear-interpolated empirical quantiles of the scores.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size < 2:
        raise DataError("confidence interval needs at least 2 scores")
    if not 0.0 < level < 1.0:
        raise ConfigError(f"level must lie in (0,1), got {level}")
    if scores.min() == scores.max():
        # a constant sample has zero spread; bypass fp noise in the mean
        return float(scores[0]), float(scores[0])
    if kind == "t":
        se = float(scores.std(ddof=1)) / math.sqrt(scores.size)
        half = t_ppf(0.5 + level / 2.0, scores.size - 1) * se
        mean = float(scores.mean())
        return mean - half, mean + half
    if kind == "percentile":
        lo, hi = np.quantile(scores, [0.5 - level / 2.0, 0.5 + level / 2.0])
        return float(lo), float(hi)
    raise ConfigError(f"unknown interval kind {kind!r}")
