"""Nonlinear autoencoder reducer trained with backpropagation.

Architecture: two ReLU layers down to the reduced width, mirrored by a
ReLU layer and a linear output layer on the way back up. The bottleneck
activation (after its ReLU) is the reduced representation. Hidden width
is round((in + out)/2), halves rounded up. Training minimizes elementwise
mean squared reconstruction error with a decoupled-weight-decay Adam
optimizer at learning rate 1e-3, monitoring loss on a held-out tenth of
the pretrain rows and stopping once validation loss has risen a fixed
number of consecutive epochs; the weights from the best validation epoch
are returned.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..rng import derive_seed
from .base import FitMeta, NlaeParams, ReducerModel, relu

DEFAULT_MAX_EPOCHS = 200
DEFAULT_PATIENCE = 3
DEFAULT_BATCH = 64
LEARNING_RATE = 1e-3
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

_PARAM_KEYS = ("w1", "b1", "w2", "b2", "w2d", "b2d", "w1d", "b1d")


def hidden_width(in_dims: int, out_dims: int) -> int:
    """round((in+out)/2) with halves rounded up."""
    return (in_dims + out_dims + 1) // 2


class EarlyStopper:
    """Track validation losses; stop after `patience` consecutive rises.

    A rise means strictly greater than the previous epoch's loss. The
    best (lowest) epoch seen so far is remembered so its weights can be
    restored after stopping.
    """

    def __init__(self, patience: int):
        if patience < 1:
            raise ConfigError("patience must be positive")
        self.patience = patience
        self.best_epoch = -1
        self.best_loss = np.inf
        self._prev = np.inf
        self._rises = 0

    def update(self, epoch: int, loss: float) -> bool:
        """Record one epoch's validation loss; True means stop now."""
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_epoch = epoch
        if loss > self._prev:
            self._rises += 1
        else:
            self._rises = 0
        self._prev = loss
        return self._rises >= self.patience


BIAS_INIT = 0.01


def init_params(in_dims: int, out_dims: int, rng) -> dict[str, np.ndarray]:
    h = hidden_width(in_dims, out_dims)

    def glorot(fan_in, fan_out):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    # hidden biases start slightly positive so no unit is born dead;
    # the linear output bias starts at zero
    return {
        "w1": glorot(in_dims, h),
        "b1": np.full(h, BIAS_INIT),
        "w2": glorot(h, out_dims),
        "b2": np.full(out_dims, BIAS_INIT),
        "w2d": glorot(out_dims, h),
        "b2d": np.full(h, BIAS_INIT),
        "w1d": glorot(h, in_dims),
        "b1d": np.zeros(in_dims),
    }


def reconstruction_loss(params: dict[str, np.ndarray], x: np.ndarray) -> float:
    h1 = relu(x @ params["w1"] + params["b1"])
    z = relu(h1 @ params["w2"] + params["b2"])
    h2 = relu(z @ params["w2d"] + params["b2d"])
    y = h2 @ params["w1d"] + params["b1d"]
    return float(np.mean((y - x) ** 2))


def loss_and_grads(
    params: dict[str, np.ndarray], x: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean squared reconstruction error and its exact gradients."""
    h1 = relu(x @ params["w1"] + params["b1"])
    z = relu(h1 @ params["w2"] + params["b2"])
    h2 = relu(z @ params["w2d"] + params["b2d"])
    y = h2 @ params["w1d"] + params["b1d"]
    diff = y - x
    loss = float(np.mean(diff**2))

    dy = (2.0 / diff.size) * diff
    grads = {"w1d": h2.T @ dy, "b1d": dy.sum(axis=0)}
    dh2 = (dy @ params["w1d"].T) * (h2 > 0)
    grads["w2d"] = z.T @ dh2
    grads["b2d"] = dh2.sum(axis=0)
    dz = (dh2 @ params["w2d"].T) * (z > 0)
    grads["w2"] = h1.T @ dz
    grads["b2"] = dz.sum(axis=0)
    dh1 = (dz @ params["w2"].T) * (h1 > 0)
    grads["w1"] = x.T @ dh1
    grads["b1"] = dh1.sum(axis=0)
    return loss, grads


class AdamW:
    """Adam with decoupled weight decay (decay skips the bias vectors)."""

    def __init__(self, params: dict[str, np.ndarray], lr: float, weight_decay: float):
        self.lr = lr
        self.weight_decay = weight_decay
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        self.t += 1
        b1c = 1.0 - ADAM_BETA1**self.t
        b2c = 1.0 - ADAM_BETA2**self.t
        for key, g in grads.items():
            self.m[key] = ADAM_BETA1 * self.m[key] + (1 - ADAM_BETA1) * g
            self.v[key] = ADAM_BETA2 * self.v[key] + (1 - ADAM_BETA2) * g**2
            update = (self.m[key] / b1c) / (np.sqrt(self.v[key] / b2c) + ADAM_EPS)
            params[key] -= self.lr * update
            if self.weight_decay and not key.startswith("b"):
                params[key] -= self.lr * self.weight_decay * params[key]


def fit_nlae(
    x,
    k: int,
    seed: int = 0,
    max_epochs: int = DEFAULT_MAX_EPOCHS,
    patience: int = DEFAULT_PATIENCE,
    batch_size: int = DEFAULT_BATCH,
    weight_decay: float = 0.0,
) -> ReducerModel:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ConfigError(f"pretrain data must be a 2-D matrix, got shape {x.shape}")
    n, d = x.shape
    if n < 10:
        raise ConfigError(f"need at least 10 pretrain rows for a validation split, got {n}")
    if not 1 <= k <= d:
        raise ConfigError(f"k must lie in [1, dims], got {k}")
    if max_epochs < 1:
        raise ConfigError("max_epochs must be positive")

    rng = np.random.default_rng(derive_seed(seed, "nlae"))
    order = rng.permutation(n)
    n_val = max(1, n // 10)
    val, train = x[order[:n_val]], x[order[n_val:]]

    params = init_params(d, k, rng)
    opt = AdamW(params, LEARNING_RATE, weight_decay)
    stopper = EarlyStopper(patience)
    trace: list[float] = []
    best = {key: v.copy() for key, v in params.items()}

    epochs_run = 0
    for epoch in range(1, max_epochs + 1):
        perm = rng.permutation(train.shape[0])
        for start in range(0, train.shape[0], batch_size):
            batch = train[perm[start : start + batch_size]]
            _, grads = loss_and_grads(params, batch)
            opt.step(params, grads)
        val_loss = reconstruction_loss(params, val)
        trace.append(val_loss)
        epochs_run = epoch
        # snapshot before the stopper sees the loss; first best wins ties
        if val_loss < stopper.best_loss:
            best = {key: v.copy() for key, v in params.items()}
        if stopper.update(epoch, val_loss):
            break

    meta = FitMeta(
        n_pretrain_rows=n,
        seed=seed,
        iterations_run=epochs_run,
        final_objective=stopper.best_loss,
    )
    return ReducerModel(
        "nlae", d, k, NlaeParams(**{key: best[key] for key in _PARAM_KEYS}), meta, tuple(trace)
    )
