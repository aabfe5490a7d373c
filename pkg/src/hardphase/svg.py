"""Minimal deterministic SVG line plots.

Output depends only on the input data: no timestamps, ids or external
assets, and every coordinate is printed with a fixed number of decimals.
"""
import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 480
MARGIN = (70, 20, 30, 55)  # left, right, top, bottom
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


class PlotError(ValueError):
    """Unusable plot input."""


@dataclass(frozen=True)
class Series:
    name: str
    x: np.ndarray
    y: np.ndarray
    kind: str = "line"  # line | points


@dataclass
class Figure:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    logy: bool = False
    series: list = field(default_factory=list)
    polygons: list = field(default_factory=list)  # (name, [(x, y), ...])
    markers: list = field(default_factory=list)   # (name, x, y)
    hlines: list = field(default_factory=list)    # y values

    def add(self, name, x, y, kind="line"):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise PlotError(f"series {name!r}: x and y must be equal-length 1-d arrays")
        if x.size < 2:
            raise PlotError(f"series {name!r} needs at least two points")
        if kind not in ("line", "points"):
            raise PlotError(f"unknown series kind {kind!r}")
        self.series.append(Series(name, x, y, kind))
        return self


def _ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


def _fmt(v):
    return f"{v:.2f}"


def _label(v):
    return f"{v:.4g}"


def render(fig):
    """SVG document for ``fig`` as a string."""
    if not fig.series:
        raise PlotError("figure has no series")
    xs = [s.x for s in fig.series] + [np.array([p[0] for p in pts]) for _, pts in fig.polygons]
    ys = [s.y for s in fig.series] + [np.array([p[1] for p in pts]) for _, pts in fig.polygons]
    xs += [np.array([m[1]]) for m in fig.markers]
    ys += [np.array([m[2]]) for m in fig.markers] + [np.array([h]) for h in fig.hlines]
    xall = np.concatenate(xs)
    yall = np.concatenate(ys)
    if fig.logy:
        yall = yall[yall > 0]
        if yall.size == 0:
            raise PlotError("log axis needs positive data")
        yall = np.log10(yall)
    xall = xall[np.isfinite(xall)]
    yall = yall[np.isfinite(yall)]
    if xall.size == 0 or yall.size == 0:
        raise PlotError("no finite data")
    x0, x1 = float(xall.min()), float(xall.max())
    y0, y1 = float(yall.min()), float(yall.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.04 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    left, right, top, bottom = MARGIN
    pw, ph = WIDTH - left - right, HEIGHT - top - bottom

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        if fig.logy:
            y = math.log10(y) if y > 0 else y0
        return top + (y1 - y) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        X = _fmt(px(t))
        out.append(f'<line x1="{X}" y1="{top + ph}" x2="{X}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X}" y="{top + ph + 18}" text-anchor="middle">{_label(t)}</text>')
    for t in _ticks(y0, y1):
        Y = _fmt(top + (y1 - t) / (y1 - y0) * ph)
        text = _label(10.0 ** t) if fig.logy else _label(t)
        out.append(f'<line x1="{left - 5}" y1="{Y}" x2="{left}" y2="{Y}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{Y}" text-anchor="end" dominant-baseline="middle">'
                   f'{text}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle">'
               f'{escape(fig.xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.2f})">{escape(fig.ylabel)}</text>')
    if fig.title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="18" text-anchor="middle" font-size="14">'
                   f'{escape(fig.title)}</text>')
    for h in fig.hlines:
        Y = _fmt(py(h))
        out.append(f'<line x1="{left}" y1="{Y}" x2="{left + pw}" y2="{Y}" stroke="gray" '
                   f'stroke-dasharray="4 3"/>')
    for name, pts in fig.polygons:
        path = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in pts)
        out.append(f'<polygon points="{path}" fill="#eeeeee" stroke="gray">'
                   f'<title>{escape(name)}</title></polygon>')
    for i, s in enumerate(fig.series):
        color = PALETTE[i % len(PALETTE)]
        keep = np.isfinite(s.x) & np.isfinite(s.y)
        if fig.logy:
            keep &= s.y > 0
        pts = [(_fmt(px(a)), _fmt(py(b))) for a, b in zip(s.x[keep], s.y[keep])]
        if s.kind == "line":
            path = " ".join(f"{a},{b}" for a, b in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" '
                       f'stroke-width="1.5"><title>{escape(s.name)}</title></polyline>')
        else:
            for a, b in pts:
                out.append(f'<circle cx="{a}" cy="{b}" r="3" fill="{color}"/>')
        out.append(f'<text x="{left + pw - 8}" y="{top + 16 + 14 * i}" text-anchor="end" '
                   f'fill="{color}">{escape(s.name)}</text>')
    for name, a, b in fig.markers:
        X, Y = _fmt(px(a)), _fmt(py(b))
        out.append(f'<circle cx="{X}" cy="{Y}" r="4" fill="black"/>')
        out.append(f'<text x="{X}" y="{Y}" dx="6" dy="-6">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(series, style="line", **kwargs):
    """SVG for named columns.

    Parameters
    ----------
    series : dict
        name -> (x, y).
    style : {"line", "points", "phase", "ladder"}
        ``phase`` overlays the triangle D and the sink Z; ``ladder`` draws
        points with a zero line.
    kwargs
        title, xlabel, ylabel, logy.
    """
    if not series:
        raise PlotError("no series given")
    fig = Figure(**kwargs)
    kind = "points" if style in ("points", "ladder") else "line"
    for name in series:
        x, y = series[name]
        fig.add(name, x, y, kind)
    if style == "phase":
        from .phase_plane import TRIANGLE_TOP, Z
        fig.polygons.append(("D", [(0.0, 0.0), (0.0, TRIANGLE_TOP), (TRIANGLE_TOP, TRIANGLE_TOP)]))
        fig.markers.append(("Z", Z[0], Z[1]))
    elif style == "ladder":
        fig.hlines.append(0.0)
    elif style not in ("line", "points"):
        raise PlotError(f"unknown style {style!r}")
    return render(fig)
