"""Per-message embeddings from a pretrained transformer checkpoint.

One input line yields one output row: the mean over the chosen hidden
layer's token vectors. Padding positions never enter the mean; the
begin/end marker tokens do unless the extraction spec turns them off.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .batch import compute_batch_size
from .errors import ConfigError, ExtractError
from .ueb import write_table

log = logging.getLogger(__name__)

DEFAULT_LAYER = -2
DEFAULT_MAX_TOKENS = 512
DEFAULT_MEMORY_BUDGET = 2_000_000_000
PRECISION_BITS = 32


@dataclass(frozen=True)
class ExtractionSpec:
    """Everything one extraction run needs.

    ``input_path`` is a TSV file, one message per line: the user id,
    a tab, then the message text. ``layer`` indexes the model's hidden
    states and may be negative (-2 is the second to last layer).
    """

    model: str
    input_path: str | Path
    output_path: str | Path
    layer: int = DEFAULT_LAYER
    max_tokens: int = DEFAULT_MAX_TOKENS
    memory_budget_bytes: float = DEFAULT_MEMORY_BUDGET
    include_special_tokens: bool = True

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ConfigError(f"max_tokens must be positive, got {self.max_tokens}")
        if self.memory_budget_bytes <= 0:
            raise ConfigError("memory budget must be positive")


@dataclass(frozen=True)
class ExtractReport:
    rows: int
    cols: int
    batch_size: int
    empty_messages: int
    output_path: Path


def read_messages(path) -> tuple[list[str], list[str]]:
    """Parse ``user<TAB>message`` lines into (user_ids, texts)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ExtractError(f"cannot read {path}: {exc}") from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    users: list[str] = []
    texts: list[str] = []
    for lineno, line in enumerate(lines, start=1):
        user, sep, message = line.partition("\t")
        if not sep:
            raise ExtractError(f"{path}:{lineno}: expected 'user<TAB>message'")
        if not user.strip():
            raise ExtractError(f"{path}:{lineno}: empty user id")
        users.append(user.strip())
        texts.append(message)
    if not users:
        raise ExtractError(f"{path}: no messages")
    return users, texts


def load_checkpoint(model_id: str):
    """Tokenizer plus eval-mode model for a local path or hub id."""
    try:
        from transformers import AutoModel, AutoTokenizer
    except ImportError as exc:  # pragma: no cover
        raise ExtractError(f"transformer backend unavailable: {exc}") from exc
    try:
        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModel.from_pretrained(model_id)
    except ExtractError:
        raise
    except Exception as exc:
        raise ExtractError(f"cannot load checkpoint {model_id!r}: {exc}") from exc
    model.eval()
    return tokenizer, model


def model_size_bytes(model) -> int:
    return sum(p.numel() * p.element_size() for p in model.parameters())


def extract(spec: ExtractionSpec) -> ExtractReport:
    """Embed every message in the spec's input file and write the table."""
    import torch

    users, texts = read_messages(spec.input_path)
    tokenizer, model = load_checkpoint(spec.model)

    n_states = int(model.config.num_hidden_layers) + 1
    if not -n_states <= spec.layer < n_states:
        raise ConfigError(
            f"layer {spec.layer} out of range: model exposes {n_states} hidden states"
        )
    model_vocab = int(getattr(model.config, "vocab_size", 0))
    if int(tokenizer.vocab_size) > model_vocab:
        raise ExtractError(
            f"tokenizer emits up to {tokenizer.vocab_size} token ids "
            f"but the model embeds only {model_vocab}"
        )

    hidden = int(model.config.hidden_size)
    batch_size = compute_batch_size(
        spec.memory_budget_bytes,
        model_size_bytes(model),
        PRECISION_BITS,
        1,
        hidden,
        spec.max_tokens,
    )

    out = np.zeros((len(texts), hidden), dtype=np.float32)
    pending = [(i, t) for i, t in enumerate(texts) if t.strip() != ""]
    empty = len(texts) - len(pending)
    if empty:
        log.warning("%d empty message(s) produced zero rows", empty)

    with torch.no_grad():
        for start in range(0, len(pending), batch_size):
            chunk = pending[start : start + batch_size]
            enc = tokenizer(
                [t for _, t in chunk],
                return_tensors="pt",
                padding=True,
                truncation=True,
                max_length=spec.max_tokens,
                return_special_tokens_mask=True,
            )
            special = enc.pop("special_tokens_mask")
            states = model(**enc, output_hidden_states=True).hidden_states[spec.layer]
            mask = enc["attention_mask"].to(states.dtype)
            if not spec.include_special_tokens:
                mask = mask * (1.0 - special.to(states.dtype))
            counts = mask.sum(dim=1, keepdim=True).clamp(min=1.0)
            means = (states * mask.unsqueeze(-1)).sum(dim=1) / counts
            rows = means.cpu().numpy().astype(np.float32)
            for (row_index, _), vec in zip(chunk, rows):
                out[row_index] = vec

    ids = [f"m{i:06d}" for i in range(1, len(texts) + 1)]
    write_table(out, ids, users, spec.output_path)
    return ExtractReport(len(texts), hidden, batch_size, empty, Path(spec.output_path))
