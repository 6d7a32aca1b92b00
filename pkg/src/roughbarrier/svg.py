"""Self-contained SVG line charts (no plotting dependency).

Each plotted point is a ``<circle>`` carrying its data coordinates in
``data-x``/``data-y`` attributes, so charts can be checked programmatically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 720, 460
MARGIN = dict(left=80, right=30, top=50, bottom=60)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e")


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    markers: bool = True
    dashed: bool = False
    points: list = field(init=False)

    def __post_init__(self):
        self.points = [(float(a), float(b)) for a, b in zip(self.x, self.y)
                       if math.isfinite(a) and math.isfinite(b)]


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        return [10.0 ** k for k in range(math.floor(lo), math.ceil(hi) + 1)]
    span = hi - lo or 1.0
    step = 10 ** math.floor(math.log10(span / 5))
    for m in (1, 2, 5, 10):
        if span / (step * m) <= 6:
            step *= m
            break
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _fmt(v: float) -> str:
    return f"{v:.3g}"


def line_chart(series: Sequence[Series], *, title: str, xlabel: str, ylabel: str,
               x_log: bool = False, y_log: bool = False, note: str = "") -> str:
    tx = (lambda v: math.log10(v)) if x_log else (lambda v: v)
    ty = (lambda v: math.log10(v)) if y_log else (lambda v: v)
    pts = [(tx(a), ty(b)) for s in series for a, b in s.points
           if (a > 0 or not x_log) and (b > 0 or not y_log)]
    if not pts:
        pts = [(0.0, 0.0), (1.0, 1.0)]
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    L, R, Tm, B = MARGIN["left"], WIDTH - MARGIN["right"], MARGIN["top"], HEIGHT - MARGIN["bottom"]

    def px(v):
        return L + (v - x0) / (x1 - x0) * (R - L)

    def py(v):
        return B - (v - y0) / (y1 - y0) * (B - Tm)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="28" text-anchor="middle" font-size="16">{escape(title)}</text>',
        f'<line x1="{L}" y1="{B}" x2="{R}" y2="{B}" stroke="black"/>',
        f'<line x1="{L}" y1="{B}" x2="{L}" y2="{Tm}" stroke="black"/>',
    ]
    for v in _ticks(x0, x1, x_log):
        tv = tx(v) if x_log else v
        if x0 - 1e-12 <= tv <= x1 + 1e-12:
            out.append(f'<line x1="{px(tv):.2f}" y1="{B}" x2="{px(tv):.2f}" y2="{B + 5}" stroke="black"/>')
            out.append(f'<text x="{px(tv):.2f}" y="{B + 18}" text-anchor="middle">{_fmt(v)}</text>')
    for v in _ticks(y0, y1, y_log):
        tv = ty(v) if y_log else v
        if y0 - 1e-12 <= tv <= y1 + 1e-12:
            out.append(f'<line x1="{L - 5}" y1="{py(tv):.2f}" x2="{L}" y2="{py(tv):.2f}" stroke="black"/>')
            out.append(f'<line x1="{L}" y1="{py(tv):.2f}" x2="{R}" y2="{py(tv):.2f}" stroke="#eeeeee"/>')
            out.append(f'<text x="{L - 8}" y="{py(tv) + 4:.2f}" text-anchor="end">{_fmt(v)}</text>')
    out.append(f'<text x="{(L + R) / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{(Tm + B) / 2}" text-anchor="middle" '
               f'transform="rotate(-90 18 {(Tm + B) / 2})">{escape(ylabel)}</text>')

    for i, s in enumerate(series):
        color = COLORS[i % len(COLORS)]
        vis = [(a, b) for a, b in s.points if (a > 0 or not x_log) and (b > 0 or not y_log)]
        if len(vis) > 1:
            path = " ".join(f"{px(tx(a)):.2f},{py(ty(b)):.2f}" for a, b in vis)
            dash = ' stroke-dasharray="6,4"' if s.dashed else ""
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"{dash}/>')
        if s.markers:
            for a, b in vis:
                out.append(f'<circle cx="{px(tx(a)):.2f}" cy="{py(ty(b)):.2f}" r="3.5" fill="{color}" '
                           f'data-series="{escape(s.label)}" data-x="{a!r}" data-y="{b!r}"/>')
        ly = Tm + 10 + 18 * i
        out.append(f'<line x1="{R - 170}" y1="{ly}" x2="{R - 145}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{R - 140}" y="{ly + 4}">{escape(s.label)}</text>')
    if note:
        out.append(f'<text x="{L + 5}" y="{HEIGHT - 35}" font-size="10" fill="#555555">{escape(note)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
