"""Static SVG plots of score versus k, one panel per task.

Emitted as plain SVG text with stable class names ("series", "band",
"reference", "tick") so structure can be asserted without an image
library. The x axis is log2(k); each training-sample size n_ta gets one
line plus a shaded confidence band, and the no-reduction cell, when
present, draws a dashed horizontal reference.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import DataError
from .sweep import atomic_write_text, slug

log = logging.getLogger(__name__)

WIDTH = 720
HEIGHT = 440
MARGIN_LEFT = 64
MARGIN_RIGHT = 150
MARGIN_TOP = 44
MARGIN_BOTTOM = 52

PALETTE = (
    "#4477aa",
    "#ee6677",
    "#228833",
    "#ccbb44",
    "#66ccee",
    "#aa3377",
    "#777777",
)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _x_scale(ks: list[int]):
    lo, hi = math.log2(ks[0]), math.log2(ks[-1])
    span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT

    def x(k: int) -> float:
        if hi == lo:
            return MARGIN_LEFT + span / 2
        return MARGIN_LEFT + (math.log2(k) - lo) / (hi - lo) * span

    return x


def _y_scale(lo: float, hi: float):
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.08 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    span = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def y(v: float) -> float:
        return MARGIN_TOP + (hi - v) / (hi - lo) * span

    return y, lo, hi


def render_panel(task: str, method: str, cells: list[dict], in_dims=None) -> str:
    """SVG text for one task's score-vs-k panel."""
    if not cells:
        raise DataError("cannot render an empty panel")
    ks = sorted({c["k"] for c in cells})
    n_tas = sorted({c["n_ta"] for c in cells})
    x = _x_scale(ks)
    y, y_lo, y_hi = _y_scale(
        min(c["ci_low"] for c in cells), max(c["ci_high"] for c in cells)
    )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<title>{escape(task)} ({escape(method)})</title>',
        f'<text class="title" x="{MARGIN_LEFT}" y="24" font-size="15" '
        f'font-family="sans-serif">{escape(task)} [{escape(method)}]</text>',
    ]

    plot_bottom = HEIGHT - MARGIN_BOTTOM
    plot_right = WIDTH - MARGIN_RIGHT
    parts.append(
        f'<line class="axis" x1="{MARGIN_LEFT}" y1="{plot_bottom}" '
        f'x2="{plot_right}" y2="{plot_bottom}" stroke="#333"/>'
    )
    parts.append(
        f'<line class="axis" x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" '
        f'x2="{MARGIN_LEFT}" y2="{plot_bottom}" stroke="#333"/>'
    )
    for k in ks:
        parts.append(
            f'<text class="tick" x="{_fmt(x(k))}" y="{plot_bottom + 18}" '
            f'font-size="11" font-family="sans-serif" '
            f'text-anchor="middle">{k}</text>'
        )
    for i in range(5):
        v = y_lo + i * (y_hi - y_lo) / 4
        parts.append(
            f'<text class="tick" x="{MARGIN_LEFT - 8}" y="{_fmt(y(v) + 4)}" '
            f'font-size="11" font-family="sans-serif" '
            f'text-anchor="end">{v:.2f}</text>'
        )
    parts.append(
        f'<text class="label" x="{(MARGIN_LEFT + plot_right) / 2:.0f}" '
        f'y="{HEIGHT - 14}" font-size="12" font-family="sans-serif" '
        f'text-anchor="middle">k (log2 scale)</text>'
    )

    by_n_ta = {
        n: sorted((c for c in cells if c["n_ta"] == n), key=lambda c: c["k"])
        for n in n_tas
    }
    for i, n_ta in enumerate(n_tas):
        color = PALETTE[i % len(PALETTE)]
        row = by_n_ta[n_ta]
        upper = " ".join(f"{_fmt(x(c['k']))},{_fmt(y(c['ci_high']))}" for c in row)
        lower = " ".join(
            f"{_fmt(x(c['k']))},{_fmt(y(c['ci_low']))}" for c in reversed(row)
        )
        parts.append(
            f'<polygon class="band" data-n-ta="{n_ta}" '
            f'points="{upper} {lower}" fill="{color}" fill-opacity="0.15" '
            f'stroke="none"/>'
        )
        points = " ".join(f"{_fmt(x(c['k']))},{_fmt(y(c['mean']))}" for c in row)
        parts.append(
            f'<polyline class="series" data-n-ta="{n_ta}" points="{points}" '
            f'fill="none" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text class="legend" x="{plot_right + 12}" '
            f'y="{MARGIN_TOP + 16 + 18 * i}" font-size="12" '
            f'font-family="sans-serif" fill="{color}">n_ta={n_ta}</text>'
        )

    if in_dims is not None and in_dims in ks:
        # reference: the no-reduction cell at the largest sample size
        ref_cells = by_n_ta[n_tas[-1]]
        ref = next((c for c in ref_cells if c["k"] == in_dims), None)
        if ref is not None:
            ry = _fmt(y(ref["mean"]))
            parts.append(
                f'<line class="reference" x1="{MARGIN_LEFT}" y1="{ry}" '
                f'x2="{plot_right}" y2="{ry}" stroke="#555" '
                f'stroke-dasharray="5 4"/>'
            )
            parts.append(
                f'<text class="legend" x="{plot_right + 12}" '
                f'y="{MARGIN_TOP + 16 + 18 * len(n_tas)}" font-size="12" '
                f'font-family="sans-serif" fill="#555">no reduction</text>'
            )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot_results(doc: dict, out_dir, task: str | None = None) -> list[Path]:
    """One SVG per (task, method) in a results document.

    An empty document produces no files and only a warning, so plotting
    is always safe to chain after a sweep.
    """
    results = doc.get("results", [])
    tasks_present = {r["task"] for r in results}
    if task is not None:
        if task not in tasks_present:
            raise DataError(f"task {task!r} not present in results")
        results = [r for r in results if r["task"] == task]
    if not results:
        log.warning("no results to plot; nothing written")
        return []

    in_dims = doc.get("metadata", {}).get("in_dims")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    pairs = sorted({(r["task"], r["method"]) for r in results})
    for task_name, method in pairs:
        cells = [
            r for r in results if r["task"] == task_name and r["method"] == method
        ]
        path = out_dir / f"plot_{slug(task_name)}_{slug(method)}.svg"
        atomic_write_text(path, render_panel(task_name, method, cells, in_dims))
        written.append(path)
    return written
