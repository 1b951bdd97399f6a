"""Penalized linear models trained by full-batch gradient descent.

Three kinds: ridge regression, binary logistic regression, and a
4-class one-vs-rest logistic stack. Training starts from zero weights
and runs exactly T gradient steps on

    J(theta) = (1/n) * [ sum_i loss_i(theta) + (lambda/2) * ||theta_ni||^2 ]

where theta_ni excludes the intercept, which the model appends itself
and never penalizes. The stationary point for ridge is the solution of
(X'X + lambda*D) theta = X'y with D zeroing the intercept row, so a
converged fit matches the textbook closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, NumericsError, ShapeError

KINDS = ("ridge", "logistic", "multinomial4")
N_CLASSES = 4

DEFAULT_LAMBDA = 1.0
DEFAULT_ETA = 0.01
DEFAULT_T = 100


def _sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _with_intercept(x: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((x.shape[0], 1)), x])


@dataclass(frozen=True)
class LinearModel:
    """Trained weights: a vector for ridge/logistic, 4 rows for the stack."""

    theta: np.ndarray
    kind: str
    lam: float
    eta: float
    T: int

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        if self.kind not in KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if not np.isfinite(theta).all():
            raise NumericsError("model weights must be finite")
        if self.T < 1:
            raise ConfigError("T must be at least 1")

    @property
    def n_features(self) -> int:
        return self.theta.shape[-1] - 1


def _check_labels(y: np.ndarray, kind: str) -> None:
    if kind == "logistic" and not np.isin(y, (0.0, 1.0)).all():
        raise DataError("logistic training labels must be 0 or 1")
    if kind == "multinomial4" and not np.isin(y, (0.0, 1.0, 2.0, 3.0)).all():
        raise DataError("multinomial4 training labels must be 0..3")


def objective(theta: np.ndarray, xt: np.ndarray, y: np.ndarray, kind: str, lam: float) -> float:
    """Training objective on an intercept-augmented design matrix."""
    n = xt.shape[0]
    if kind == "ridge":
        data = 0.5 * float(((xt @ theta - y) ** 2).sum())
        pen = 0.5 * lam * float((theta[1:] ** 2).sum())
    elif kind == "logistic":
        s = xt @ theta
        data = float((np.logaddexp(0.0, s) - y * s).sum())
        pen = 0.5 * lam * float((theta[1:] ** 2).sum())
    else:
        s = xt @ theta.T
        onehot = y[:, None] == np.arange(N_CLASSES)[None, :]
        data = float((np.logaddexp(0.0, s) - onehot * s).sum())
        pen = 0.5 * lam * float((theta[:, 1:] ** 2).sum())
    return (data + pen) / n


def gradient(theta: np.ndarray, xt: np.ndarray, y: np.ndarray, kind: str, lam: float) -> np.ndarray:
    n = xt.shape[0]
    if kind == "ridge":
        resid = xt @ theta - y
        grad = xt.T @ resid
        grad[1:] += lam * theta[1:]
    elif kind == "logistic":
        resid = _sigmoid(xt @ theta) - y
        grad = xt.T @ resid
        grad[1:] += lam * theta[1:]
    else:
        onehot = (y[:, None] == np.arange(N_CLASSES)[None, :]).astype(np.float64)
        resid = _sigmoid(xt @ theta.T) - onehot
        grad = resid.T @ xt
        grad[:, 1:] += lam * theta[:, 1:]
    return grad / n


def train(
    x,
    y,
    kind: str,
    lam: float = DEFAULT_LAMBDA,
    eta: float = DEFAULT_ETA,
    T: int = DEFAULT_T,
) -> LinearModel:
    """Run exactly T full-batch gradient steps from zero weights."""
    if kind not in KINDS:
        raise ConfigError(f"unknown model kind {kind!r}")
    if lam < 0:
        raise ConfigError("lambda must be nonnegative")
    if T < 1:
        raise ConfigError("T must be at least 1")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ShapeError(f"incompatible shapes {x.shape} and {y.shape}")
    if x.shape[0] < 1:
        raise DataError("need at least one training row")
    _check_labels(y, kind)

    xt = _with_intercept(x)
    if kind == "multinomial4":
        theta = np.zeros((N_CLASSES, xt.shape[1]))
    else:
        theta = np.zeros(xt.shape[1])

    # overflow shows up as a non-finite gradient and is reported below
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, T + 1):
            grad = gradient(theta, xt, y, kind, lam)
            if not np.isfinite(grad).all():
                raise NumericsError(f"non-finite gradient at iteration {step}")
            theta = theta - eta * grad

    return LinearModel(theta, kind, lam, eta, T)


def predict(model: LinearModel, x) -> np.ndarray:
    """Scores for ridge, class labels for the logistic kinds.

    Classification ties resolve to the lowest class index: binary
    predicts 1 only on a strictly positive score, and the 4-class argmax
    takes the first maximum.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise ShapeError(
            f"expected {model.n_features} feature columns, got shape {x.shape}"
        )
    xt = _with_intercept(x)
    if model.kind == "ridge":
        return xt @ model.theta
    if model.kind == "logistic":
        return (xt @ model.theta > 0).astype(np.int64)
    scores = xt @ model.theta.T
    return np.argmax(scores, axis=1).astype(np.int64)
