"""Writer for the binary embedding interchange format.

Layout: magic ``UEB1``, u32 row count, u32 column count (both little
endian), then float32 row-major data. Row ids go to ``<name>.ids`` and
the owning user ids to ``<name>.groups``, one per line, UTF-8, LF.
"""

import struct
from pathlib import Path

import numpy as np

from .errors import ExtractError

_HEADER = struct.Struct("<4sII")
_MAGIC = b"UEB1"


def write_table(matrix, ids, groups, path) -> Path:
    """Write one message-level table plus both sidecars."""
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if matrix.ndim != 2:
        raise ExtractError(f"matrix must be 2-D, got shape {matrix.shape}")
    rows = matrix.shape[0]
    ids = list(ids)
    groups = list(groups)
    if len(ids) != rows or len(groups) != rows:
        raise ExtractError(
            f"need one id and one group per row: {rows} rows, "
            f"{len(ids)} ids, {len(groups)} groups"
        )
    for label, values in (("id", ids), ("group", groups)):
        for i, value in enumerate(values):
            if not isinstance(value, str) or not value or "\n" in value or "\r" in value:
                raise ExtractError(
                    f"row {i}: {label} values must be non-empty single-line strings"
                )
    path = Path(path)
    path.write_bytes(_HEADER.pack(_MAGIC, rows, matrix.shape[1]) + matrix.tobytes(order="C"))
    path.with_name(path.name + ".ids").write_text(
        "".join(v + "\n" for v in ids), encoding="utf-8"
    )
    path.with_name(path.name + ".groups").write_text(
        "".join(v + "\n" for v in groups), encoding="utf-8"
    )
    return path
