"""Deterministic SVG forest plots of S estimates and their intervals.

The output is plain SVG text with fixed-precision coordinates, so
identical input produces byte-identical documents.
"""

from __future__ import annotations

import math


def _row_label(row) -> str:
    label = getattr(row, "label", None)
    if label is None:
        label = getattr(row, "term", None)
    if label is None:
        raise ValueError("rows need a 'label' or 'term' attribute")
    return str(label)


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / target
    magnitude = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * magnitude:
            step = mult * magnitude
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * span:
        ticks.append(round(t, 12))
        t += step
    return ticks


def render_forest_svg(rows, width: int = 640, label_scale: float = 1.0,
                      show_ci: bool = True) -> str:
    """Forest plot: one marker per row at its S value, a horizontal
    segment for the widest requested interval, and a reference line at
    S = 0.

    ``label_scale`` scales the row-label font relative to 1 (useful for
    long coefficient names). With ``show_ci`` every row must carry
    intervals.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("forest plot needs at least one row")
    labels = [_row_label(row) for row in rows]
    values = [float(row.s) for row in rows]
    segments = None
    if show_ci:
        segments = []
        for row in rows:
            ci = getattr(row, "ci", None)
            if not ci:
                raise ValueError(
                    f"row {_row_label(row)!r} has no confidence interval"
                )
            outer = min(ci)   # smallest alpha = widest interval
            segments.append((float(ci[outer][0]), float(ci[outer][1])))

    xs = list(values) + [0.0]
    if segments:
        xs += [b for seg in segments for b in seg]
    x_min, x_max = min(xs), max(xs)
    if x_max - x_min < 1e-12:
        x_min, x_max = x_min - 0.5, x_max + 0.5
    pad = 0.05 * (x_max - x_min)
    x_min, x_max = x_min - pad, x_max + pad

    font = 11.0 * label_scale
    label_px = max(len(lbl) for lbl in labels) * font * 0.62 + 16.0
    row_h = 24.0
    top, bottom = 18.0, 42.0
    height = top + row_h * len(rows) + bottom
    plot_left, plot_right = label_px, width - 14.0

    def x_pos(v: float) -> float:
        frac = (v - x_min) / (x_max - x_min)
        return plot_left + frac * (plot_right - plot_left)

    def f(v: float) -> str:
        return f"{v:.2f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{f(height)}" viewBox="0 0 {width} {f(height)}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    axis_y = top + row_h * len(rows) + 8.0
    if x_min <= 0.0 <= x_max:
        zero_x = x_pos(0.0)
        parts.append(
            f'<line x1="{f(zero_x)}" y1="{f(top - 6)}" x2="{f(zero_x)}" '
            f'y2="{f(axis_y)}" stroke="#999999" stroke-dasharray="4,3"/>'
        )
    for i, label in enumerate(labels):
        y = top + row_h * (i + 0.5)
        parts.append(
            f'<text x="{f(label_px - 8)}" y="{f(y + font * 0.35)}" '
            f'font-size="{f(font)}" font-family="monospace" '
            f'text-anchor="end">{_escape(label)}</text>'
        )
        if segments:
            lo, hi = segments[i]
            parts.append(
                f'<line x1="{f(x_pos(lo))}" y1="{f(y)}" x2="{f(x_pos(hi))}" '
                f'y2="{f(y)}" stroke="black" stroke-width="1.2"/>'
            )
        parts.append(
            f'<circle cx="{f(x_pos(values[i]))}" cy="{f(y)}" r="3.5" fill="black"/>'
        )
    parts.append(
        f'<line x1="{f(plot_left)}" y1="{f(axis_y)}" x2="{f(plot_right)}" '
        f'y2="{f(axis_y)}" stroke="black"/>'
    )
    for tick in _nice_ticks(x_min, x_max):
        tx = x_pos(tick)
        parts.append(
            f'<line x1="{f(tx)}" y1="{f(axis_y)}" x2="{f(tx)}" '
            f'y2="{f(axis_y + 5)}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{f(tx)}" y="{f(axis_y + 18)}" font-size="10.00" '
            f'font-family="monospace" text-anchor="middle">{tick:g}</text>'
        )
    parts.append(
        f'<text x="{f((plot_left + plot_right) / 2)}" y="{f(axis_y + 34)}" '
        f'font-size="11.00" font-family="monospace" text-anchor="middle">RESI</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
