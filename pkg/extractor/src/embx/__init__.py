"""Transformer checkpoints to UEB1 embedding tables, one row per message."""

__version__ = "0.1.0"

from .batch import compute_batch_size
from .errors import ConfigError, EmbxError, ExtractError
from .extract import (
    ExtractionSpec,
    ExtractReport,
    extract,
    load_checkpoint,
    model_size_bytes,
    read_messages,
)
from .ueb import write_table

__all__ = [
    "ConfigError",
    "EmbxError",
    "ExtractError",
    "ExtractReport",
    "ExtractionSpec",
    "compute_batch_size",
    "extract",
    "load_checkpoint",
    "model_size_bytes",
    "read_messages",
    "write_table",
]
