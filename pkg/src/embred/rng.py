"""Portable, splittable 64-bit random number generation.

Everything that must be reproducible across platforms and process
scheduling (per-user message subsampling, bootstrap replicate draws)
goes through SplitMix64 streams derived from a master seed plus a list
of string/integer keys. The derivation is order-sensitive and pure, so
replicate i always sees the same stream no matter which worker runs it.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _mix(z: int) -> int:
    """SplitMix64 output function (the 64-bit avalanche finalizer)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _fold_key(key: int | str | bytes) -> int:
    if isinstance(key, str):
        key = key.encode("utf-8")
    if isinstance(key, bytes):
        h = _FNV_OFFSET
        for b in key:
            h = ((h ^ b) * _FNV_PRIME) & MASK64
        return h
    return key & MASK64


def derive_seed(seed: int, *keys: int | str | bytes) -> int:
    """Derive a child seed from a master seed and a key path.

    derive_seed(s, a, b) != derive_seed(s, b, a) in general; collisions
    between distinct key paths are as unlikely as 64-bit hash collisions.
    """
    state = _mix(seed & MASK64)
    for key in keys:
        state = _mix((state + _GOLDEN) ^ _fold_key(key))
    return state


class SplitMix64:
    """Deterministic 64-bit stream with sampling helpers.

    Not cryptographic. Bit-stable across platforms and Python versions:
    pure integer arithmetic, no float rounding in the core.
    """

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & MASK64
        return _mix(self._state)

    def uniform(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def randint_below(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = MASK64 + 1 - ((MASK64 + 1) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def sample_without_replacement(self, n: int, k: int) -> list[int]:
        """k distinct indices from [0, n) (partial Fisher-Yates)."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot draw {k} from {n} without replacement")
        swapped: dict[int, int] = {}
        out = []
        for i in range(k):
            j = i + self.randint_below(n - i)
            out.append(swapped.get(j, j))
            swapped[j] = swapped.get(i, i)
        return out

    def sample_with_replacement(self, n: int, k: int) -> list[int]:
        """k indices from [0, n), drawn independently."""
        return [self.randint_below(n) for _ in range(k)]
