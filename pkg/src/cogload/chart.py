"""Static SVG line chart of score traces."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 860, 320
MARGIN = {"left": 56, "right": 150, "top": 24, "bottom": 44}
COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
MAX_POINTS = 1200


def _nice_step(span: float, target: int = 8) -> float:
    raw = span / max(target, 1)
    for step in (1, 2, 5, 10, 15, 30, 60, 120, 150, 300, 600, 1200, 1800, 3600):
        if step >= raw:
            return float(step)
    return float(int(raw) + 1)


def line_chart(
    t: Sequence[float],
    series: dict[str, Sequence[float]],
    title: str = "",
    y_range: tuple[float, float] = (0.0, 1.0),
    block_length: float | None = None,
) -> str:
    """Render ``series`` against ``t`` as an SVG document.

    Long series are thinned to at most ``MAX_POINTS`` vertices by striding.
    Coordinates are written with two decimals so output is byte-stable.
    """
    n = len(t)
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    t0 = float(t[0]) if n else 0.0
    t1 = float(t[-1]) if n else 1.0
    if t1 <= t0:
        t1 = t0 + 1.0
    y0, y1 = y_range

    def sx(v: float) -> float:
        return MARGIN["left"] + (v - t0) / (t1 - t0) * pw

    def sy(v: float) -> float:
        v = min(max(v, y0), y1)
        return MARGIN["top"] + (1.0 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{MARGIN["left"]}" y="16" font-size="13">{escape(title)}</text>')

    # grid and axes
    for i in range(6):
        v = y0 + (y1 - y0) * i / 5
        y = sy(v)
        out.append(f'<line x1="{MARGIN["left"]}" y1="{y:.2f}" x2="{MARGIN["left"] + pw}" y2="{y:.2f}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{y + 4:.2f}" text-anchor="end">{v:.1f}</text>')
    step = _nice_step(t1 - t0)
    tick = step * int(t0 // step)
    while tick <= t1 + 1e-9:
        if tick >= t0:
            x = sx(tick)
            out.append(f'<line x1="{x:.2f}" y1="{MARGIN["top"] + ph}" x2="{x:.2f}" y2="{MARGIN["top"] + ph + 4}" stroke="black"/>')
            out.append(f'<text x="{x:.2f}" y="{MARGIN["top"] + ph + 17}" text-anchor="middle">{tick:g}</text>')
        tick += step
    if block_length:
        b = block_length
        while b < t1:
            if b > t0:
                x = sx(b)
                out.append(
                    f'<line x1="{x:.2f}" y1="{MARGIN["top"]}" x2="{x:.2f}" y2="{MARGIN["top"] + ph}" '
                    'stroke="#999" stroke-dasharray="4 3"/>'
                )
            b += block_length
    out.append(
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>'
    )
    out.append(
        f'<text x="{MARGIN["left"] + pw / 2:.2f}" y="{HEIGHT - 8}" text-anchor="middle">time (s)</text>'
    )

    stride = max(1, -(-n // MAX_POINTS))
    idx = list(range(0, n, stride))
    if n and idx[-1] != n - 1:
        idx.append(n - 1)
    for k, (name, values) in enumerate(series.items()):
        colour = COLOURS[k % len(COLOURS)]
        pts = " ".join(f"{sx(float(t[i])):.2f},{sy(float(values[i])):.2f}" for i in idx if values[i] is not None)
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN["top"] + 14 + 18 * k
        lx = MARGIN["left"] + pw + 14
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
