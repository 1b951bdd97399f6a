"""Versioned binary container for fitted reducers.

Layout (all integers little-endian):

    magic   4 bytes  "EDR1"
    version u16      currently 1
    method  u8       1=pca 2=pca_ppa 3=nmf 4=fa 5=nlae
    in_dims u32
    out_dims u32
    fit_meta: n_pretrain_rows u64, seed u64, iterations_run u32,
              final_objective f64, psi_clamps u32
    parameter blocks, then one trace block, each encoded as:
        magic "UEB8", rows u32, cols u32, rows*cols float64 LE row-major

Parameters are stored at full precision so a reloaded model transforms
bit-identically. Block order per method:

    pca:     mean(1xD), components(KxD), singular_values(1xK)
    pca_ppa: stage-in mean(1xD), stage-in top(D1xD),
             pca mean(1xD), components(KxD), singular_values(1xK),
             stage-out mean(1xK), stage-out top(D2xK)
    nmf:     column_shift(1xD), dictionary(KxD)
    fa:      mean(1xD), loadings(DxK), noise_diag(1xD)
    nlae:    w1, b1, w2, b2, w2d, b2d, w1d, b1d (vectors as 1xN)

The trace block is always last (1x0 when no trace was recorded).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .base import (
    FaParams,
    FitMeta,
    NlaeParams,
    NmfParams,
    PcaParams,
    PcaPpaParams,
    PpaParams,
    ReducerModel,
)

_MAGIC = b"EDR1"
_VERSION = 1
_HEAD = struct.Struct("<4sHBII")
_META = struct.Struct("<QQIdI")
_BLOCK_HEAD = struct.Struct("<4sII")
_BLOCK_MAGIC = b"UEB8"

_METHOD_TAGS = {"pca": 1, "pca_ppa": 2, "nmf": 3, "fa": 4, "nlae": 5}
_TAG_METHODS = {v: k for k, v in _METHOD_TAGS.items()}


def _pack_block(a: np.ndarray) -> bytes:
    a = np.ascontiguousarray(np.atleast_2d(np.asarray(a, dtype=np.float64)))
    return _BLOCK_HEAD.pack(_BLOCK_MAGIC, a.shape[0], a.shape[1]) + a.tobytes()


def _param_blocks(model: ReducerModel) -> list[np.ndarray]:
    p = model.params
    if model.method == "pca":
        return [p.mean, p.components, p.singular_values]
    if model.method == "pca_ppa":
        return [
            p.ppa_in.mean,
            p.ppa_in.top_components,
            p.pca.mean,
            p.pca.components,
            p.pca.singular_values,
            p.ppa_out.mean,
            p.ppa_out.top_components,
        ]
    if model.method == "nmf":
        return [p.column_shift, p.dictionary]
    if model.method == "fa":
        return [p.mean, p.loadings, p.noise_diag]
    return [p.w1, p.b1, p.w2, p.b2, p.w2d, p.b2d, p.w1d, p.b1d]


def save_reducer(model: ReducerModel, path) -> None:
    parts = [
        _HEAD.pack(
            _MAGIC,
            _VERSION,
            _METHOD_TAGS[model.method],
            model.in_dims,
            model.out_dims,
        ),
        _META.pack(
            model.fit_meta.n_pretrain_rows,
            model.fit_meta.seed,
            model.fit_meta.iterations_run,
            model.fit_meta.final_objective,
            model.fit_meta.psi_clamps,
        ),
    ]
    parts.extend(_pack_block(b) for b in _param_blocks(model))
    parts.append(_pack_block(np.array(model.trace, dtype=np.float64).reshape(1, -1)))
    Path(path).write_bytes(b"".join(parts))


class _Cursor:
    def __init__(self, raw: bytes, path):
        self.raw = raw
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise FormatError(f"{self.path}: truncated at byte {self.pos}")
        out = self.raw[self.pos : self.pos + n]
        self.pos += n
        return out

    def block(self) -> np.ndarray:
        magic, rows, cols = _BLOCK_HEAD.unpack(self.take(_BLOCK_HEAD.size))
        if magic != _BLOCK_MAGIC:
            raise FormatError(f"{self.path}: bad parameter block magic {magic!r}")
        payload = self.take(8 * rows * cols)
        return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy()

    def vector(self) -> np.ndarray:
        b = self.block()
        if b.shape[0] != 1:
            raise FormatError(f"{self.path}: expected a 1-row block, got {b.shape}")
        return b[0]


def load_reducer(path) -> ReducerModel:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    cur = _Cursor(raw, path)
    magic, version, tag, in_dims, out_dims = _HEAD.unpack(cur.take(_HEAD.size))
    if magic != _MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise FormatError(
            f"{path}: unsupported reducer format version {version} (expected {_VERSION})"
        )
    if tag not in _TAG_METHODS:
        raise FormatError(f"{path}: unknown method tag {tag}")
    method = _TAG_METHODS[tag]
    meta = FitMeta(*_META.unpack(cur.take(_META.size)))

    if method == "pca":
        params = PcaParams(cur.vector(), cur.block(), cur.vector())
    elif method == "pca_ppa":
        params = PcaPpaParams(
            PpaParams(cur.vector(), cur.block()),
            PcaParams(cur.vector(), cur.block(), cur.vector()),
            PpaParams(cur.vector(), cur.block()),
        )
    elif method == "nmf":
        shift = cur.vector()
        params = NmfParams(cur.block(), shift)
    elif method == "fa":
        mean = cur.vector()
        loadings = cur.block()
        params = FaParams(loadings, cur.vector(), mean)
    else:
        params = NlaeParams(
            cur.block(),
            cur.vector(),
            cur.block(),
            cur.vector(),
            cur.block(),
            cur.vector(),
            cur.block(),
            cur.vector(),
        )
    trace = tuple(float(v) for v in cur.vector())
    if cur.pos != len(raw):
        raise FormatError(f"{path}: {len(raw) - cur.pos} trailing bytes")
    return ReducerModel(method, in_dims, out_dims, params, meta, trace)
