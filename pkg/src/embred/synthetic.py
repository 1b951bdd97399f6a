"""Synthetic corpora with a planted low-rank signal.

Users live near a random rank-r subspace of the embedding space and
outcomes are linear in the latent coordinates, so a good reducer can
recover predictive features with far fewer dimensions than the ambient
space. Used by demos and end-to-end tests; not part of the pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import EmbeddingTable, OutcomeTable, TaskDataset
from .errors import ConfigError


@dataclass(frozen=True)
class SyntheticCorpus:
    pretrain: EmbeddingTable
    task: TaskDataset
    signal_basis: np.ndarray  # dims x rank, orthonormal columns


def _embed(rng, n, basis, signal, noise):
    dims, rank = basis.shape
    z = rng.normal(size=(n, rank))
    x = signal * z @ basis.T + noise * rng.normal(size=(n, dims))
    return z, x.astype(np.float32)


def _outcomes(raw: np.ndarray, kind: str) -> np.ndarray:
    if kind == "continuous":
        return raw
    if kind == "binary":
        return (raw > np.median(raw)).astype(np.float64)
    cuts = np.quantile(raw, [0.25, 0.5, 0.75])
    return np.digitize(raw, cuts).astype(np.float64)


def make_corpus(
    n_train: int = 2000,
    n_test: int = 500,
    n_pretrain: int = 2000,
    dims: int = 768,
    rank: int = 8,
    kind: str = "continuous",
    seed: int = 0,
    signal: float = 1.0,
    noise: float = 0.5,
    outcome_noise: float = 0.1,
    task_name: str = "synthetic",
) -> SyntheticCorpus:
    """User-level corpus: pretrain rows plus a train/test task split."""
    if min(n_train, n_test, n_pretrain) < 2:
        raise ConfigError("need at least 2 rows in every split")
    if not 1 <= rank <= dims:
        raise ConfigError(f"rank must lie in [1, dims], got {rank}")
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.normal(size=(dims, rank)))
    w = rng.normal(size=rank)

    _, x_pre = _embed(rng, n_pretrain, basis, signal, noise)
    pretrain = EmbeddingTable(
        ids=tuple(f"p{i:05d}" for i in range(n_pretrain)),
        matrix=x_pre,
        level="user",
    )

    n = n_train + n_test
    z, x = _embed(rng, n, basis, signal, noise)
    raw = z @ w + outcome_noise * rng.normal(size=n)
    y = _outcomes(raw, kind)
    ids = [f"u{i:05d}" for i in range(n)]

    def side(rows):
        feats = EmbeddingTable(
            ids=tuple(ids[i] for i in rows), matrix=x[rows], level="user"
        )
        outs = OutcomeTable({ids[i]: float(y[i]) for i in rows}, kind)
        return feats, outs

    tr_f, tr_o = side(range(n_train))
    te_f, te_o = side(range(n_train, n))
    task = TaskDataset(tr_f, tr_o, te_f, te_o, task_name=task_name)
    return SyntheticCorpus(pretrain=pretrain, task=task, signal_basis=basis)


def make_message_corpus(
    users: EmbeddingTable,
    messages_per_user: int = 5,
    jitter: float = 0.2,
    seed: int = 0,
) -> EmbeddingTable:
    """Message-level table whose per-user mean approximates each user row."""
    if users.level != "user":
        raise ConfigError("expected a user-level table")
    if messages_per_user < 1:
        raise ConfigError("messages_per_user must be at least 1")
    rng = np.random.default_rng(seed)
    ids, groups, rows = [], [], []
    for u, base in zip(users.ids, users.matrix):
        for j in range(messages_per_user):
            ids.append(f"{u}_m{j:03d}")
            groups.append(u)
            rows.append(base + jitter * rng.normal(size=base.shape))
    return EmbeddingTable(
        ids=tuple(ids),
        matrix=np.asarray(rows, dtype=np.float32),
        level="message",
        group_keys=tuple(groups),
    )
