"""Batch sizing from a device memory budget.

The budget must cover the loaded weights plus one batch of retained
activations; whatever remains is divided by the bytes one padded
sequence occupies at the stated precision.
"""

import math

from .errors import ConfigError


def compute_batch_size(
    gpu_memory_bytes: float,
    model_size_bytes: float,
    floating_precision_bits: int,
    layers: int,
    hidden_size: int,
    max_tokens: int,
) -> int:
    """Sequences per batch: floor((memory - model) / bytes per sequence)."""
    named = {
        "gpu_memory_bytes": gpu_memory_bytes,
        "model_size_bytes": model_size_bytes,
        "floating_precision_bits": floating_precision_bits,
        "layers": layers,
        "hidden_size": hidden_size,
        "max_tokens": max_tokens,
    }
    for name, value in named.items():
        if value <= 0:
            raise ConfigError(f"{name} must be positive, got {value}")
    if gpu_memory_bytes <= model_size_bytes:
        raise ConfigError(
            "memory budget must exceed the model size "
            f"({gpu_memory_bytes} <= {model_size_bytes})"
        )
    per_sequence = (floating_precision_bits / 8.0) * layers * hidden_size * max_tokens
    size = math.floor((gpu_memory_bytes - model_size_bytes) / per_sequence)
    if size < 1:
        raise ConfigError(
            "memory budget leaves no room for a single sequence; "
            "lower max_tokens or raise the budget"
        )
    return int(size)
