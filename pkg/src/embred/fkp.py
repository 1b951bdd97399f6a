"""First-k-to-peak tables and exponential medians over sweep grids.

A grid cell is one evaluated (task, n_ta, k) combination. For a fixed
task and n_ta, the first k to peak is the smallest k whose mean score
already reaches the lower confidence bound of the best cell; scores are
higher-is-better throughout, so membership is checked one-sidedly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .bootstrap import BootstrapResult
from .errors import ConfigError, DataError, IncompleteGridError


@dataclass(frozen=True)
class SweepGrid:
    """Completed evaluation cells keyed by (task, n_ta, k)."""

    cells: Mapping[tuple[str, int, int], BootstrapResult]
    k_values: tuple[int, ...]
    n_ta_values: tuple[int, ...]

    def __post_init__(self):
        if not self.cells:
            raise DataError("a sweep grid needs at least one cell")
        object.__setattr__(self, "cells", dict(self.cells))
        object.__setattr__(self, "k_values", tuple(self.k_values))
        object.__setattr__(self, "n_ta_values", tuple(self.n_ta_values))
        for name, vals in (("k_values", self.k_values), ("n_ta_values", self.n_ta_values)):
            if not vals:
                raise ConfigError(f"{name} must be non-empty")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ConfigError(f"{name} must be strictly increasing: {vals}")
        for key, res in self.cells.items():
            task, n_ta, k = key
            if (res.task_name, res.n_ta, res.k) != (task, n_ta, k):
                raise DataError(
                    f"cell key {key} does not match its result "
                    f"({res.task_name}, {res.n_ta}, {res.k})"
                )
            if n_ta not in self.n_ta_values or k not in self.k_values:
                raise DataError(f"cell {key} outside the declared grid axes")

    @classmethod
    def from_results(cls, results: Iterable[BootstrapResult]) -> "SweepGrid":
        """Build a grid with axes inferred from the results themselves."""
        cells: dict[tuple[str, int, int], BootstrapResult] = {}
        for res in results:
            key = (res.task_name, res.n_ta, res.k)
            if key in cells:
                raise DataError(f"duplicate cell {key}")
            cells[key] = res
        if not cells:
            raise DataError("a sweep grid needs at least one cell")
        ks = tuple(sorted({k for _, _, k in cells}))
        n_tas = tuple(sorted({n for _, n, _ in cells}))
        return cls(cells, ks, n_tas)

    @property
    def tasks(self) -> tuple[str, ...]:
        return tuple(sorted({t for t, _, _ in self.cells}))

    def row(self, task: str, n_ta: int) -> dict[int, BootstrapResult]:
        """All cells for one task at one training-sample size."""
        return {
            k: res for (t, n, k), res in self.cells.items()
            if t == task and n == n_ta
        }


@dataclass(frozen=True)
class FkpRow:
    """One report line: a task family at one training-sample size."""

    family: str
    n_ta: int
    tasks: tuple[str, ...]
    fkps: tuple[int, ...]
    exp_median: float

    def __post_init__(self):
        if not self.fkps or len(self.fkps) != len(self.tasks):
            raise DataError("tasks and fkps must align and be non-empty")
        if not min(self.fkps) <= self.exp_median <= max(self.fkps):
            raise DataError(
                f"exponential median {self.exp_median} outside "
                f"[{min(self.fkps)}, {max(self.fkps)}]"
            )


@dataclass(frozen=True)
class FkpReport:
    rows: tuple[FkpRow, ...]
    metadata: Mapping[str, object] = field(default_factory=dict)


def first_k_to_peak(row: Mapping[int, BootstrapResult]) -> int:
    """Smallest k whose mean reaches the peak cell's lower CI bound."""
    if not row:
        raise DataError("first_k_to_peak needs a non-empty row")
    cells = [row[k] for k in sorted(row)]
    ident = {(c.task_name, c.n_ta) for c in cells}
    if len(ident) > 1:
        raise DataError(f"row mixes tasks or sample sizes: {sorted(ident)}")
    best_mean = max(c.mean for c in cells)
    peak = next(c for c in cells if c.mean == best_mean)  # ties: smallest k
    for cell in cells:
        if cell.mean >= peak.ci_low:
            return cell.k
    raise DataError("no cell reaches the peak's lower bound")  # unreachable


def exponential_median(ks: Iterable[int]) -> float:
    """2 ** median(log2 ks); even-length lists use the midpoint."""
    values = list(ks)
    if not values:
        raise DataError("exponential_median needs at least one value")
    if any(v <= 0 for v in values):
        raise DataError(f"all values must be positive: {values}")
    lo, hi = min(values), max(values)
    if lo == hi:
        return float(values[0])
    med = float(2.0 ** np.median(np.log2(np.asarray(values, dtype=np.float64))))
    # the log-median lies in [log lo, log hi]; clamp away fp dust
    return min(max(med, float(lo)), float(hi))


def display_k(value: float) -> int:
    """Rounded form used in tables; the exact value stays in the report."""
    return int(round(value))


def build_fkp_table(
    grid: SweepGrid, families: Mapping[str, str]
) -> FkpReport:
    """First-k-to-peak per task plus per-family exponential medians.

    Family column order follows first appearance in the mapping; rows
    run over n_ta ascending within each family.
    """
    if not families:
        raise ConfigError("families mapping must be non-empty")
    for task in grid.tasks:
        if task not in families:
            raise ConfigError(f"no family assigned for task {task!r}")

    missing = [
        (task, n_ta, k)
        for task in families
        for n_ta in grid.n_ta_values
        for k in grid.k_values
        if (task, n_ta, k) not in grid.cells
    ]
    if missing:
        raise IncompleteGridError(missing)

    family_order: list[str] = []
    members: dict[str, list[str]] = {}
    for task, family in families.items():
        if family not in members:
            family_order.append(family)
            members[family] = []
        members[family].append(task)

    rows = []
    for family in family_order:
        for n_ta in grid.n_ta_values:
            fkps = tuple(
                first_k_to_peak(grid.row(task, n_ta)) for task in members[family]
            )
            rows.append(
                FkpRow(
                    family=family,
                    n_ta=n_ta,
                    tasks=tuple(members[family]),
                    fkps=fkps,
                    exp_median=exponential_median(fkps),
                )
            )

    seeds = tuple(sorted({res.seed for res in grid.cells.values()}))
    metadata = {
        "seeds": seeds,
        "k_values": grid.k_values,
        "n_ta_values": grid.n_ta_values,
        "replicates": len(next(iter(grid.cells.values())).scores),
    }
    return FkpReport(rows=tuple(rows), metadata=metadata)


def fkp_table_csv(report: FkpReport) -> str:
    """Medians as a families-by-n_ta table, rounded for display."""
    family_order: list[str] = []
    for row in report.rows:
        if row.family not in family_order:
            family_order.append(row.family)
    n_tas = sorted({row.n_ta for row in report.rows})
    medians = {(r.family, r.n_ta): r.exp_median for r in report.rows}
    lines = ["n_ta," + ",".join(family_order)]
    for n_ta in n_tas:
        cells = [str(display_k(medians[(f, n_ta)])) for f in family_order]
        lines.append(f"{n_ta}," + ",".join(cells))
    return "\n".join(lines) + "\n"


def fkp_report_json(report: FkpReport) -> dict:
    """JSON-ready document with per-task detail behind each median."""
    return {
        "rows": [
            {
                "family": row.family,
                "n_ta": row.n_ta,
                "fkp": dict(zip(row.tasks, row.fkps)),
                "exp_median": row.exp_median,
                "exp_median_display": display_k(row.exp_median),
            }
            for row in report.rows
        ],
        "metadata": {
            key: list(val) if isinstance(val, tuple) else val
            for key, val in report.metadata.items()
        },
    }
