"""Experiment configuration: one JSON document drives the pipeline.

Every tunable the pipeline consumes has an explicit value here, either
from the file or from a materialized default, so the manifest written
next to the results is self-describing. Seeding is always explicit;
there is no wall-clock fallback.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, fields
from pathlib import Path

from .corpus import KINDS
from .errors import ConfigError
from .reducers.base import METHODS

DEFAULT_K_GRID = (16, 32, 64, 128, 256, 512)
DEFAULT_N_TA_GRID = (50, 100, 200, 500, 1000)

_REQUIRED = (
    "pretrain",
    "train_embeddings",
    "test_embeddings",
    "train_outcomes",
    "test_outcomes",
    "task_name",
    "task_kind",
    "seed",
    "out_dir",
)

_PATH_FIELDS = (
    "pretrain",
    "train_embeddings",
    "test_embeddings",
    "train_outcomes",
    "test_outcomes",
)


@dataclass(frozen=True)
class ExperimentConfig:
    pretrain: str
    train_embeddings: str
    test_embeddings: str
    train_outcomes: str
    test_outcomes: str
    task_name: str
    task_kind: str
    seed: int
    out_dir: str
    methods: tuple[str, ...] = ("pca",)
    k_grid: tuple[int, ...] | None = None  # None: defaults plus input dims
    n_ta_grid: tuple[int, ...] = DEFAULT_N_TA_GRID
    B: int = 10
    lam: float = 1.0
    eta: float = 0.01
    T: int = 100
    ci: str = "t"
    disattenuate: bool = False
    family: str = ""
    nmf_iterations: int = 300
    fa_iterations: int = 200
    fa_tol: float = 1e-6
    nlae_max_epochs: int = 200
    nlae_patience: int = 3
    nlae_batch: int = 64

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "n_ta_grid", tuple(self.n_ta_grid))
        if self.k_grid is not None:
            object.__setattr__(self, "k_grid", tuple(self.k_grid))
        if self.task_kind not in KINDS:
            raise ConfigError(f"unknown task kind {self.task_kind!r}")
        if not self.methods:
            raise ConfigError("methods list must be non-empty")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown reduction method {m!r}")
        for name, grid in (("k_grid", self.k_grid), ("n_ta_grid", self.n_ta_grid)):
            if grid is None:
                continue
            if not grid:
                raise ConfigError(f"{name} must be non-empty")
            if any(v < 1 for v in grid):
                raise ConfigError(f"{name} entries must be positive: {grid}")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError(f"{name} must be strictly increasing: {grid}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if self.B < 2:
            raise ConfigError(f"B must be at least 2, got {self.B}")
        if self.lam < 0 or self.eta < 0 or self.T < 1:
            raise ConfigError("model hyperparameters out of range")
        if not self.family:
            object.__setattr__(self, "family", self.task_name)

    def resolved_k_grid(self, in_dims: int) -> tuple[int, ...]:
        """The k axis, with the no-reduction dim appended when defaulted."""
        if self.k_grid is not None:
            return self.k_grid
        ks = [k for k in DEFAULT_K_GRID if k <= in_dims]
        if in_dims not in ks:
            ks.append(in_dims)
        return tuple(ks)

    def to_dict(self) -> dict:
        """Materialized view: every field, defaults included."""
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out


def config_hash(cfg: ExperimentConfig) -> str:
    """Stable digest over the materialized config; changes iff it does."""
    doc = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(doc.encode("utf-8")).hexdigest()


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate a JSON config file.

    Relative paths resolve against the file's own directory. Unknown
    keys are rejected so typos cannot silently fall back to defaults.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    if overrides:
        raw.update(overrides)

    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = [name for name in _REQUIRED if name not in raw]
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")

    base = path.resolve().parent
    for name in _PATH_FIELDS:
        raw[name] = str((base / raw[name]).resolve())
    raw["out_dir"] = str((base / raw["out_dir"]).resolve())

    for name, value in list(raw.items()):
        if isinstance(value, list):
            raw[name] = tuple(value)
    cfg = ExperimentConfig(**raw)

    for name in _PATH_FIELDS:
        if not Path(getattr(cfg, name)).is_file():
            raise ConfigError(f"{name} file not found: {getattr(cfg, name)}")
    return cfg
