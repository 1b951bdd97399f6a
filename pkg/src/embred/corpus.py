"""Embedding/outcome tables and their on-disk interchange formats.

Two embedding formats are supported:

* binary "UEB1": magic ``UEB1``, u32-LE row count, u32-LE column count,
  then rows*cols float32-LE values, row-major. Record ids live in a
  sidecar ``<name>.ids`` (one id per line, UTF-8, LF), and message-level
  tables carry an additional ``<name>.groups`` sidecar of user ids with
  the same line count.
* CSV: header ``id[,group],d0,d1,...`` followed by decimal float rows.

Outcomes are CSV with header ``user_id,value``.

Loaded tables are immutable (arrays are marked read-only) and therefore
safe to share across threads.
"""

from __future__ import annotations

import csv
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AlignmentError, DataError, FormatError

log = logging.getLogger(__name__)

LEVELS = ("message", "user")
KINDS = ("continuous", "binary", "multiclass4")

_UEB1_MAGIC = b"UEB1"
_HEADER = struct.Struct("<4sII")


def _check_ids(ids) -> tuple[str, ...]:
    ids = tuple(ids)
    seen = set()
    for i, rid in enumerate(ids):
        if not isinstance(rid, str) or rid == "":
            raise DataError(f"row {i}: ids must be non-empty strings")
        if "\n" in rid or "\r" in rid:
            raise DataError(f"row {i}: ids must not contain newlines")
        if rid in seen:
            raise DataError(f"duplicate id {rid!r}")
        seen.add(rid)
    return ids


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    """Record ids paired with a dense float32 matrix of embeddings.

    ``level`` is "message" or "user"; message-level tables must carry a
    non-empty ``group_keys`` user id for every row.
    """

    ids: tuple[str, ...]
    matrix: np.ndarray
    level: str
    group_keys: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.level not in LEVELS:
            raise DataError(f"unknown level {self.level!r}")
        ids = _check_ids(self.ids)
        object.__setattr__(self, "ids", ids)
        m = np.ascontiguousarray(self.matrix, dtype=np.float32)
        if m.ndim != 2:
            raise DataError(f"matrix must be 2-D, got shape {m.shape}")
        if m.shape[1] == 0:
            raise DataError("embedding tables must have dims > 0")
        if m.shape[0] != len(ids):
            raise DataError(
                f"{len(ids)} ids but {m.shape[0]} matrix rows"
            )
        bad = np.flatnonzero(~np.isfinite(m).all(axis=1))
        if bad.size:
            raise DataError(f"non-finite value in row {int(bad[0])}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.level == "message":
            if self.group_keys is None:
                raise DataError("message-level tables require group keys")
            gk = tuple(self.group_keys)
            if len(gk) != len(ids):
                raise DataError("group_keys length must match rows")
            for i, g in enumerate(gk):
                if not isinstance(g, str) or g == "" or "\n" in g or "\r" in g:
                    raise DataError(f"row {i}: empty or invalid group key")
            object.__setattr__(self, "group_keys", gk)
        elif self.group_keys is not None:
            raise DataError("user-level tables must not carry group keys")

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def dims(self) -> int:
        return self.matrix.shape[1]

    def equals(self, other: "EmbeddingTable") -> bool:
        """Bit-exact equality of ids, values, level and group keys."""
        return (
            self.ids == other.ids
            and self.level == other.level
            and self.group_keys == other.group_keys
            and self.matrix.shape == other.matrix.shape
            and bool(
                (self.matrix.view(np.uint32) == other.matrix.view(np.uint32)).all()
            )
        )


@dataclass(frozen=True)
class OutcomeTable:
    """user_id -> value map with a task kind attached.

    Entries preserve insertion order; values are stored as float64 and
    validated against the kind's admissible range.
    """

    entries: dict[str, float]
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown outcome kind {self.kind!r}")
        checked: dict[str, float] = {}
        for uid, value in self.entries.items():
            checked[uid] = _check_outcome_value(value, self.kind, uid)
        object.__setattr__(self, "entries", checked)

    def __len__(self) -> int:
        return len(self.entries)

    def ids(self) -> tuple[str, ...]:
        return tuple(self.entries)

    def values_for(self, ids) -> np.ndarray:
        """Outcome vector aligned to the given id sequence."""
        try:
            return np.array([self.entries[i] for i in ids], dtype=np.float64)
        except KeyError as exc:
            raise DataError(f"no outcome for id {exc.args[0]!r}") from None


def _check_outcome_value(value, kind: str, uid: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise DataError(f"user {uid!r}: not a number: {value!r}") from None
    if not np.isfinite(v):
        raise DataError(f"user {uid!r}: non-finite outcome")
    if kind == "binary" and v not in (0.0, 1.0):
        raise DataError(f"user {uid!r}: binary outcome must be 0 or 1, got {value!r}")
    if kind == "multiclass4" and v not in (0.0, 1.0, 2.0, 3.0):
        raise DataError(f"user {uid!r}: multiclass4 outcome must be 0..3, got {value!r}")
    return v


@dataclass(frozen=True)
class TaskDataset:
    """Aligned train/test features and outcomes for one task."""

    train_features: EmbeddingTable
    train_outcomes: OutcomeTable
    test_features: EmbeddingTable
    test_outcomes: OutcomeTable
    task_name: str

    def __post_init__(self):
        for tab in (self.train_features, self.test_features):
            if tab.level != "user":
                raise DataError("task features must be user-level")
        if self.train_features.dims != self.test_features.dims:
            raise DataError(
                f"train dims {self.train_features.dims} != test dims "
                f"{self.test_features.dims}"
            )
        if self.train_outcomes.kind != self.test_outcomes.kind:
            raise DataError("train and test outcome kinds differ")
        for feats, outs, side in (
            (self.train_features, self.train_outcomes, "train"),
            (self.test_features, self.test_outcomes, "test"),
        ):
            if set(feats.ids) != set(outs.entries):
                raise DataError(f"{side} features and outcomes id sets differ")
        overlap = set(self.train_features.ids) & set(self.test_features.ids)
        if overlap:
            raise DataError(
                f"train and test user sets overlap ({len(overlap)} ids)"
            )

    @property
    def kind(self) -> str:
        return self.train_outcomes.kind

    @property
    def dims(self) -> int:
        return self.train_features.dims


# ---------------------------------------------------------------------------
# loading / saving
# ---------------------------------------------------------------------------


def load_embeddings(path, format: str = "binary") -> EmbeddingTable:
    """Load an embedding table; row order is preserved from the file."""
    path = Path(path)
    if format == "binary":
        return _load_binary(path)
    if format == "csv":
        return _load_csv(path)
    raise FormatError(f"unknown embedding format {format!r}")


def save_embeddings(table: EmbeddingTable, path, format: str = "binary") -> None:
    path = Path(path)
    if format == "binary":
        _save_binary(table, path)
    elif format == "csv":
        _save_csv(table, path)
    else:
        raise FormatError(f"unknown embedding format {format!r}")


def _sidecar(path: Path, suffix: str) -> Path:
    return path.with_name(path.name + suffix)


def _read_sidecar(path: Path, rows: int, what: str) -> list[str]:
    if not path.exists():
        raise FormatError(f"missing sidecar {path}")
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) != rows:
        raise FormatError(
            f"{path}: {len(lines)} {what} lines for {rows} matrix rows"
        )
    return lines


def _load_binary(path: Path) -> EmbeddingTable:
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, rows, cols = _HEADER.unpack_from(raw)
    if magic != _UEB1_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * rows * cols
    if len(raw) != expected:
        raise FormatError(
            f"{path}: expected {expected} bytes for {rows}x{cols}, got {len(raw)}"
        )
    matrix = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(rows, cols)
    ids = _read_sidecar(_sidecar(path, ".ids"), rows, "id")
    groups_path = _sidecar(path, ".groups")
    groups = None
    level = "user"
    if groups_path.exists():
        groups = _read_sidecar(groups_path, rows, "group")
        level = "message"
    return EmbeddingTable(
        tuple(ids), matrix, level, tuple(groups) if groups is not None else None
    )


def _save_binary(table: EmbeddingTable, path: Path) -> None:
    payload = table.matrix.astype("<f4", copy=False).tobytes(order="C")
    path.write_bytes(_HEADER.pack(_UEB1_MAGIC, table.rows, table.dims) + payload)
    _sidecar(path, ".ids").write_text(
        "".join(i + "\n" for i in table.ids), encoding="utf-8"
    )
    if table.level == "message":
        _sidecar(path, ".groups").write_text(
            "".join(g + "\n" for g in table.group_keys), encoding="utf-8"
        )


def _load_csv(path: Path) -> EmbeddingTable:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if not header or header[0] != "id":
            raise FormatError(f"{path}: header must start with 'id'")
        has_group = len(header) > 1 and header[1] == "group"
        first_dim = 2 if has_group else 1
        dim_names = header[first_dim:]
        if not dim_names or dim_names != [f"d{i}" for i in range(len(dim_names))]:
            raise FormatError(f"{path}: dimension columns must be d0,d1,...")
        dims = len(dim_names)
        ids, groups, rows = [], [], []
        for rownum, rec in enumerate(reader):
            if len(rec) != len(header):
                raise FormatError(
                    f"{path}: row {rownum} has {len(rec)} fields, expected {len(header)}"
                )
            ids.append(rec[0])
            if has_group:
                groups.append(rec[1])
            try:
                values = [float(v) for v in rec[first_dim:]]
            except ValueError:
                raise DataError(f"{path}: row {rownum}: unparseable float") from None
            if not all(np.isfinite(values)):
                raise DataError(f"{path}: non-finite value in row {rownum}")
            rows.append(values)
        matrix = np.array(rows, dtype=np.float32).reshape(len(ids), dims)
    level = "message" if has_group else "user"
    return EmbeddingTable(
        tuple(ids), matrix, level, tuple(groups) if has_group else None
    )


def _save_csv(table: EmbeddingTable, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        head = ["id"] + (["group"] if table.level == "message" else [])
        writer.writerow(head + [f"d{i}" for i in range(table.dims)])
        for i, rid in enumerate(table.ids):
            rec = [rid]
            if table.level == "message":
                rec.append(table.group_keys[i])
            rec.extend(repr(float(v)) for v in table.matrix[i])
            writer.writerow(rec)


def load_outcomes(path, kind: str) -> OutcomeTable:
    """Load a user_id,value CSV as an OutcomeTable of the given kind."""
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if header != ["user_id", "value"]:
            raise FormatError(f"{path}: header must be user_id,value")
        entries: dict[str, float] = {}
        for rownum, rec in enumerate(reader):
            if len(rec) != 2:
                raise FormatError(f"{path}: row {rownum} has {len(rec)} fields")
            uid, value = rec
            if uid == "":
                raise DataError(f"{path}: row {rownum}: empty user_id")
            if value == "":
                raise DataError(f"{path}: row {rownum}: missing value")
            if uid in entries:
                raise DataError(f"{path}: duplicate user_id {uid!r}")
            entries[uid] = _check_outcome_value(value, kind, uid)
    return OutcomeTable(entries, kind)


def save_outcomes(table: OutcomeTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["user_id", "value"])
        for uid, value in table.entries.items():
            writer.writerow([uid, repr(value) if table.kind == "continuous" else int(value)])


def align(
    features: EmbeddingTable, outcomes: OutcomeTable
) -> tuple[EmbeddingTable, OutcomeTable]:
    """Restrict both sides to their id intersection, in feature row order.

    Drop counts are logged; an empty intersection raises AlignmentError.
    """
    if features.level != "user":
        raise DataError("align requires user-level features")
    keep = [i for i, rid in enumerate(features.ids) if rid in outcomes.entries]
    if not keep:
        raise AlignmentError(
            f"no ids in common between {features.rows} feature rows and "
            f"{len(outcomes)} outcomes"
        )
    kept_ids = tuple(features.ids[i] for i in keep)
    dropped_features = features.rows - len(keep)
    dropped_outcomes = len(outcomes) - len(keep)
    if dropped_features or dropped_outcomes:
        log.info(
            "align: dropped %d feature rows and %d outcomes",
            dropped_features,
            dropped_outcomes,
        )
    aligned_features = EmbeddingTable(
        kept_ids, features.matrix[keep], "user", None
    )
    aligned_outcomes = OutcomeTable(
        {rid: outcomes.entries[rid] for rid in kept_ids}, outcomes.kind
    )
    return aligned_features, aligned_outcomes
