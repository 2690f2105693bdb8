"""Standalone SVG chart of share price with per-day sentiment markers."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

from .labels import Label
from .market import AlignedTable, write_aligned_csv

__all__ = ["render_svg", "emit_chart", "MARKER_COLORS"]

MARKER_COLORS = {
    Label.POSITIVE: "#2e7d32",
    Label.NEGATIVE: "#c62828",
    Label.NEUTRAL: "#757575",
}
MARGIN = {"left": 70, "right": 20, "top": 40, "bottom": 50}


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _marker(label: Label, x: float, y: float, r: float) -> str:
    color = MARKER_COLORS.get(label, MARKER_COLORS[Label.NEUTRAL])
    if label is Label.POSITIVE:
        pts = f"{_fmt(x)},{_fmt(y - r)} {_fmt(x - r)},{_fmt(y + r)} {_fmt(x + r)},{_fmt(y + r)}"
        return f'<polygon class="marker positive" points="{pts}" fill="{color}"/>'
    if label is Label.NEGATIVE:
        pts = f"{_fmt(x)},{_fmt(y + r)} {_fmt(x - r)},{_fmt(y - r)} {_fmt(x + r)},{_fmt(y - r)}"
        return f'<polygon class="marker negative" points="{pts}" fill="{color}"/>'
    return f'<circle class="marker neutral" cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r * 0.8)}" fill="{color}"/>'


def marker_geometry(n_rows: int, width: int = 1200) -> tuple[list[float], float]:
    """x positions of ``n_rows`` evenly spaced days and a marker half-width
    small enough that neighbouring markers never touch."""
    plot_w = width - MARGIN["left"] - MARGIN["right"]
    if n_rows == 1:
        return [MARGIN["left"] + plot_w / 2.0], 6.0
    step = plot_w / (n_rows - 1)
    xs = [MARGIN["left"] + i * step for i in range(n_rows)]
    return xs, min(6.0, 0.4 * step)


def render_svg(table: AlignedTable, width: int = 1200, height: int = 500, title: str = "Sentiment vs. share price") -> str:
    rows = table.rows
    if not rows:
        raise ValueError("cannot chart an empty table")
    xs, r = marker_geometry(len(rows), width)
    plot_h = height - MARGIN["top"] - MARGIN["bottom"]
    band_y = MARGIN["top"] + plot_h + 18
    closes = [row.close for row in rows]
    lo, hi = min(closes), max(closes)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = (hi - lo) * 0.05
    lo, hi = lo - pad, hi + pad

    def y_of(c: float) -> float:
        return MARGIN["top"] + (hi - c) / (hi - lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{escape(title)}</text>',
    ]
    left, right = MARGIN["left"], width - MARGIN["right"]
    bottom = MARGIN["top"] + plot_h
    out.append(f'<line class="axis" x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="#000"/>')
    out.append(f'<line class="axis" x1="{left}" y1="{MARGIN["top"]}" x2="{left}" y2="{bottom}" stroke="#000"/>')
    for i in range(5):
        value = lo + (hi - lo) * i / 4
        y = y_of(value)
        out.append(
            f'<text class="tick" x="{left - 6}" y="{_fmt(y + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{value:.2f}</text>'
        )
    n_labels = min(len(rows), 8)
    for k in range(n_labels):
        i = round(k * (len(rows) - 1) / max(n_labels - 1, 1))
        out.append(
            f'<text class="date" x="{_fmt(xs[i])}" y="{height - 8}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{rows[i].date.isoformat()}</text>'
        )
    points = " ".join(f"{_fmt(x)},{_fmt(y_of(row.close))}" for x, row in zip(xs, rows))
    out.append(f'<polyline class="price" points="{points}" fill="none" stroke="#1565c0" stroke-width="1.5"/>')
    for x, row in zip(xs, rows):
        out.append(_marker(row.label, x, band_y, r))
    legend_x = right - 260
    for j, lab in enumerate((Label.POSITIVE, Label.NEGATIVE, Label.NEUTRAL)):
        lx = legend_x + j * 90
        out.append(_marker(lab, lx, 20, 5).replace('class="marker', 'class="legend'))
        out.append(f'<text x="{lx + 9}" y="24" font-family="sans-serif" font-size="11">{lab.value}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_chart(table: AlignedTable, path: str | Path, width: int = 1200, height: int = 500) -> tuple[Path, Path]:
    """Write the SVG to ``path`` and its CSV twin next to it (``.csv`` suffix)."""
    path = Path(path)
    svg = render_svg(table, width, height)
    path.write_text(svg, encoding="utf-8")
    twin = path.with_suffix(".csv")
    write_aligned_csv(table, twin)
    return path, twin
