"""Shared reducer model container and the table-level transform entry point.

A fitted reducer is an immutable ReducerModel holding method-specific
parameters, bookkeeping about the fit (FitMeta), and an optional
objective trace. All parameters are kept in float64 so that saved and
reloaded models transform bit-identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ..corpus import EmbeddingTable
from ..errors import ShapeError

METHODS = ("pca", "pca_ppa", "nmf", "fa", "nlae")


def _frozen(a, shape=None) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    if shape is not None and out.shape != shape:
        raise ShapeError(f"expected shape {shape}, got {out.shape}")
    out.setflags(write=False)
    return out


def relu(a: np.ndarray) -> np.ndarray:
    return np.maximum(a, 0.0)


@dataclass(frozen=True)
class FitMeta:
    n_pretrain_rows: int
    seed: int
    iterations_run: int
    final_objective: float
    psi_clamps: int = 0


@dataclass(frozen=True)
class PcaParams:
    """Orthonormal row components with the training mean and spectrum."""

    mean: np.ndarray
    components: np.ndarray
    singular_values: np.ndarray

    def __post_init__(self):
        k, d = np.shape(self.components)
        object.__setattr__(self, "mean", _frozen(self.mean, (d,)))
        object.__setattr__(self, "components", _frozen(self.components))
        object.__setattr__(self, "singular_values", _frozen(self.singular_values, (k,)))

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) @ self.components.T


@dataclass(frozen=True)
class PpaParams:
    """Mean plus the top principal directions removed by post-processing.

    top_components may have zero rows, in which case applying the stage
    only mean-centers.
    """

    mean: np.ndarray
    top_components: np.ndarray

    def __post_init__(self):
        d = np.shape(self.mean)[0]
        object.__setattr__(self, "mean", _frozen(self.mean, (d,)))
        top = _frozen(self.top_components)
        if top.ndim != 2 or top.shape[1] != d:
            raise ShapeError(f"top_components must be D x {d}, got {top.shape}")
        object.__setattr__(self, "top_components", top)

    @property
    def removed(self) -> int:
        return self.top_components.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        c = x - self.mean
        if self.removed == 0:
            return c
        return c - (c @ self.top_components.T) @ self.top_components


@dataclass(frozen=True)
class PcaPpaParams:
    ppa_in: PpaParams
    pca: PcaParams
    ppa_out: PpaParams

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.ppa_out.apply(self.pca.apply(self.ppa_in.apply(x)))


@dataclass(frozen=True)
class NmfParams:
    """Nonnegative dictionary H and the per-column shift used at fit time."""

    dictionary: np.ndarray
    column_shift: np.ndarray

    def __post_init__(self):
        k, d = np.shape(self.dictionary)
        object.__setattr__(self, "dictionary", _frozen(self.dictionary))
        object.__setattr__(self, "column_shift", _frozen(self.column_shift, (d,)))
        if (self.dictionary < 0).any():
            raise ShapeError("NMF dictionary must be nonnegative")

    def apply(self, x: np.ndarray) -> np.ndarray:
        from .nmf import project_nonneg

        shifted = np.maximum(x + self.column_shift, 0.0)
        return project_nonneg(shifted, self.dictionary)


@dataclass(frozen=True)
class FaParams:
    loadings: np.ndarray
    noise_diag: np.ndarray
    mean: np.ndarray

    def __post_init__(self):
        d, k = np.shape(self.loadings)
        object.__setattr__(self, "loadings", _frozen(self.loadings))
        object.__setattr__(self, "noise_diag", _frozen(self.noise_diag, (d,)))
        object.__setattr__(self, "mean", _frozen(self.mean, (d,)))
        if (self.noise_diag <= 0).any():
            raise ShapeError("noise_diag entries must be positive")

    def apply(self, x: np.ndarray) -> np.ndarray:
        lam, psi = self.loadings, self.noise_diag
        k = lam.shape[1]
        psi_inv_lam = lam / psi[:, None]
        m = np.eye(k) + lam.T @ psi_inv_lam
        # posterior mean of the factors given the observation
        return np.linalg.solve(m, psi_inv_lam.T @ (x - self.mean).T).T


@dataclass(frozen=True)
class NlaeParams:
    """Two-layer ReLU encoder and mirrored decoder weights."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w2d: np.ndarray
    b2d: np.ndarray
    w1d: np.ndarray
    b1d: np.ndarray

    def __post_init__(self):
        in_dims, hidden = np.shape(self.w1)
        out = np.shape(self.w2)[1]
        object.__setattr__(self, "w1", _frozen(self.w1, (in_dims, hidden)))
        object.__setattr__(self, "b1", _frozen(self.b1, (hidden,)))
        object.__setattr__(self, "w2", _frozen(self.w2, (hidden, out)))
        object.__setattr__(self, "b2", _frozen(self.b2, (out,)))
        object.__setattr__(self, "w2d", _frozen(self.w2d, (out, hidden)))
        object.__setattr__(self, "b2d", _frozen(self.b2d, (hidden,)))
        object.__setattr__(self, "w1d", _frozen(self.w1d, (hidden, in_dims)))
        object.__setattr__(self, "b1d", _frozen(self.b1d, (in_dims,)))

    @property
    def hidden(self) -> int:
        return self.w1.shape[1]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return relu(relu(x @ self.w1 + self.b1) @ self.w2 + self.b2)

    def decode(self, z: np.ndarray) -> np.ndarray:
        return relu(z @ self.w2d + self.b2d) @ self.w1d + self.b1d


Params = Union[PcaParams, PcaPpaParams, NmfParams, FaParams, NlaeParams]


@dataclass(frozen=True)
class ReducerModel:
    method: str
    in_dims: int
    out_dims: int
    params: Params
    fit_meta: FitMeta
    trace: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.method not in METHODS:
            raise ShapeError(f"unknown reducer method {self.method!r}")
        if not 1 <= self.out_dims <= self.in_dims:
            raise ShapeError(
                f"out_dims must lie in [1, in_dims], got {self.out_dims}/{self.in_dims}"
            )

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Transform a float matrix (rows are vectors); returns float64."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.in_dims:
            raise ShapeError(
                f"model expects {self.in_dims} dims, got {x.shape[1]}"
            )
        out = self.params.apply(x)
        return out[0] if single else out


def transform(model: ReducerModel, table: EmbeddingTable) -> EmbeddingTable:
    """Apply a fitted reducer row-wise; ids, level and groups carry over."""
    if table.dims != model.in_dims:
        raise ShapeError(
            f"table has {table.dims} dims but model expects {model.in_dims}"
        )
    reduced = model.apply(table.matrix).astype(np.float32)
    return EmbeddingTable(table.ids, reduced, table.level, table.group_keys)
