"""Collapse message-level embeddings into one mean vector per user.

Each user's messages are put into a canonical order (sorted by message
id) before accumulation, so the result does not depend on row order in
the input table. When a message cap is configured, users over the cap
contribute a uniform without-replacement subsample drawn from a portable
generator seeded per user, which keeps the chosen subset stable under
corpus reordering and across processes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import EmbeddingTable
from .errors import ConfigError, DataError
from .rng import SplitMix64, derive_seed


@dataclass(frozen=True)
class AggregationConfig:
    message_cap: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.message_cap is not None:
            if not isinstance(self.message_cap, int) or self.message_cap < 1:
                raise ConfigError(
                    f"message_cap must be a positive integer, got {self.message_cap!r}"
                )
        if not isinstance(self.seed, int) or self.seed < 0 or self.seed >= 2**64:
            raise ConfigError(f"seed must fit in 64 unsigned bits, got {self.seed!r}")


def aggregate_users(
    messages: EmbeddingTable, cfg: AggregationConfig = AggregationConfig()
) -> EmbeddingTable:
    """Mean-pool message rows per user into a user-level table.

    Output rows are sorted by user id. With ``message_cap`` set, a user
    holding more messages than the cap is represented by exactly
    ``message_cap`` of them, chosen uniformly without replacement.
    """
    if messages.level != "message":
        raise DataError("aggregate_users requires a message-level table")
    if messages.rows == 0:
        raise DataError("no messages to aggregate")

    by_user: dict[str, list[int]] = {}
    for row, user in enumerate(messages.group_keys):
        by_user.setdefault(user, []).append(row)

    users = sorted(by_user)
    out = np.empty((len(users), messages.dims), dtype=np.float32)
    ids = messages.ids
    cap = cfg.message_cap
    for u, user in enumerate(users):
        rows = by_user[user]
        # canonical order: sorted message ids, not file order
        rows.sort(key=lambda r: ids[r])
        if cap is not None and len(rows) > cap:
            gen = SplitMix64(derive_seed(cfg.seed, user))
            picked = gen.sample_without_replacement(len(rows), cap)
            rows = [rows[i] for i in picked]
        acc = np.zeros(messages.dims, dtype=np.float64)
        for r in rows:
            acc += messages.matrix[r]
        out[u] = (acc / len(rows)).astype(np.float32)

    return EmbeddingTable(tuple(users), out, "user", None)
