"""Minimal deterministic SVG line plots for headless report generation.

Hand-rolled on purpose: identical inputs must yield byte-identical files,
and the report runs in CI containers with no display stack.
"""

from __future__ import annotations

import math

__all__ = ["Series", "line_plot", "multi_panel"]


class Series:
    def __init__(self, label, points, color="#000000", dashed=False):
        self.label = label
        self.points = [(float(x), float(y)) for x, y in points]
        self.color = color
        self.dashed = dashed


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10.0 ** math.floor(math.log10(span / n))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if span / (step * mult) <= n:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * span:
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return ticks


def _panel(series, x0, y0, width, height, title, xlabel, ylabel):
    xs = [p[0] for s in series for p in s.points]
    ys = [p[1] for s in series for p in s.points]
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    xlo, xhi = min(xs), max(xs)
    ylo, yhi = min(ys), max(ys)
    if xhi == xlo:
        xhi = xlo + 1.0
    if yhi == ylo:
        yhi = ylo + 1.0
    pad_y = 0.05 * (yhi - ylo)
    ylo -= pad_y
    yhi += pad_y

    ml, mr, mt, mb = 64, 12, 28, 40
    px0, py0 = x0 + ml, y0 + mt
    pw, ph = width - ml - mr, height - mt - mb

    def sx(x):
        return px0 + (x - xlo) / (xhi - xlo) * pw

    def sy(y):
        return py0 + ph - (y - ylo) / (yhi - ylo) * ph

    out = [
        f'<rect x="{_fmt(px0)}" y="{_fmt(py0)}" width="{_fmt(pw)}" height="{_fmt(ph)}" '
        'fill="none" stroke="#888888" stroke-width="1"/>',
        f'<text x="{_fmt(x0 + width / 2)}" y="{_fmt(y0 + 18)}" text-anchor="middle" '
        f'font-size="13" font-family="monospace">{title}</text>',
        f'<text x="{_fmt(px0 + pw / 2)}" y="{_fmt(py0 + ph + 32)}" text-anchor="middle" '
        f'font-size="11" font-family="monospace">{xlabel}</text>',
        f'<text x="{_fmt(x0 + 14)}" y="{_fmt(py0 + ph / 2)}" text-anchor="middle" '
        f'font-size="11" font-family="monospace" '
        f'transform="rotate(-90 {_fmt(x0 + 14)} {_fmt(py0 + ph / 2)})">{ylabel}</text>',
    ]
    for t in _ticks(xlo, xhi):
        out.append(
            f'<line x1="{_fmt(sx(t))}" y1="{_fmt(py0 + ph)}" x2="{_fmt(sx(t))}" '
            f'y2="{_fmt(py0 + ph + 4)}" stroke="#888888" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(sx(t))}" y="{_fmt(py0 + ph + 16)}" text-anchor="middle" '
            f'font-size="10" font-family="monospace">{_fmt(t)}</text>'
        )
    for t in _ticks(ylo, yhi):
        out.append(
            f'<line x1="{_fmt(px0 - 4)}" y1="{_fmt(sy(t))}" x2="{_fmt(px0)}" '
            f'y2="{_fmt(sy(t))}" stroke="#888888" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(px0 - 6)}" y="{_fmt(sy(t) + 3)}" text-anchor="end" '
            f'font-size="10" font-family="monospace">{_fmt(t)}</text>'
        )
    for s in series:
        if not s.points:
            continue
        pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in s.points)
        dash = ' stroke-dasharray="5,4"' if s.dashed else ""
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{s.color}" '
            f'stroke-width="1.5"{dash}/>'
        )
    return out


def _legend(series, x, y):
    out = []
    seen = []
    for s in series:
        if s.label is None or s.label in seen:
            continue
        seen.append(s.label)
        i = len(seen) - 1
        yy = y + 16 * i
        dash = ' stroke-dasharray="5,4"' if s.dashed else ""
        out.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(yy)}" x2="{_fmt(x + 24)}" y2="{_fmt(yy)}" '
            f'stroke="{s.color}" stroke-width="1.5"{dash}/>'
        )
        out.append(
            f'<text x="{_fmt(x + 30)}" y="{_fmt(yy + 4)}" font-size="11" '
            f'font-family="monospace">{s.label}</text>'
        )
    return out


def line_plot(path, series, title="", xlabel="", ylabel="", size=(640, 420)):
    """One panel with a legend, written as standalone SVG."""
    w, h = size
    body = _panel(series, 0, 0, w - 150, h, title, xlabel, ylabel)
    body += _legend(series, w - 140, 40)
    _write(path, w, h, body)


def multi_panel(path, panels, size=(960, 360)):
    """Side-by-side panels sharing one legend row.

    ``panels`` is a list of (series, title, xlabel, ylabel) tuples.
    """
    w, h = size
    n = len(panels)
    pw = (w - 150) / n
    body = []
    for i, (series, title, xlabel, ylabel) in enumerate(panels):
        body += _panel(series, i * pw, 0, pw, h, title, xlabel, ylabel)
    body += _legend(panels[0][0], w - 140, 40)
    _write(path, w, h, body)


def _write(path, w, h, body):
    with open(path, "w", newline="") as fh:
        fh.write(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
            f'viewBox="0 0 {w} {h}">\n'
        )
        fh.write('<rect width="100%" height="100%" fill="#ffffff"/>\n')
        for el in body:
            fh.write(el + "\n")
        fh.write("</svg>\n")
