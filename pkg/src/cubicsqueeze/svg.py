"""Minimal self-contained SVG rendering: heatmaps with a contour and line plots."""

from __future__ import annotations

import math
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 560, 440
MARGIN = dict(left=70, right=90, top=40, bottom=60)
PALETTE = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _diverging(t: float) -> str:
    """Blue (t=0) through white (t=0.5) to red (t=1)."""
    t = min(1.0, max(0.0, t))
    if t < 0.5:
        s = t / 0.5
        rgb = (int(40 + 215 * s), int(80 + 175 * s), 255)
    else:
        s = (t - 0.5) / 0.5
        rgb = (255, int(255 - 175 * s), int(255 - 215 * s))
    return "#%02x%02x%02x" % rgb


def _edges(c: np.ndarray) -> np.ndarray:
    if len(c) == 1:
        return np.array([c[0] - 0.5, c[0] + 0.5])
    mid = 0.5 * (c[1:] + c[:-1])
    return np.concatenate([[2 * c[0] - mid[0]], mid, [2 * c[-1] - mid[-1]]])


class _Frame:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def X(self, x):
        return MARGIN["left"] + (x - self.x0) / (self.x1 - self.x0) * self.pw

    def Y(self, y):
        return MARGIN["top"] + (1 - (y - self.y0) / (self.y1 - self.y0)) * self.ph

    def axes(self, xlabel, ylabel, title) -> list[str]:
        out = [
            f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{self.pw}" height="{self.ph}" '
            'fill="none" stroke="black"/>'
        ]
        for k in range(5):
            xv = self.x0 + k * (self.x1 - self.x0) / 4
            yv = self.y0 + k * (self.y1 - self.y0) / 4
            out.append(f'<text x="{_fmt(self.X(xv))}" y="{HEIGHT - MARGIN["bottom"] + 18}" '
                       f'font-size="11" text-anchor="middle">{xv:.3g}</text>')
            out.append(f'<text x="{MARGIN["left"] - 6}" y="{_fmt(self.Y(yv) + 4)}" '
                       f'font-size="11" text-anchor="end">{yv:.3g}</text>')
        out.append(f'<text x="{_fmt(MARGIN["left"] + self.pw / 2)}" y="{HEIGHT - 15}" '
                   f'font-size="13" text-anchor="middle">{escape(xlabel)}</text>')
        out.append(f'<text x="18" y="{_fmt(MARGIN["top"] + self.ph / 2)}" font-size="13" text-anchor="middle" '
                   f'transform="rotate(-90 18 {_fmt(MARGIN["top"] + self.ph / 2)})">{escape(ylabel)}</text>')
        out.append(f'<text x="{WIDTH / 2}" y="22" font-size="14" text-anchor="middle">{escape(title)}</text>')
        return out


def _document(body: Iterable[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">')
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *body, "</svg>"]) + "\n"


def contour_segments(xs, ys, values, level: float) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Marching-squares segments of ``values[i, j] = f(xs[i], ys[j])`` at ``level``."""
    V = np.asarray(values, float) - level
    segs = []
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            corners = [(xs[i], ys[j], V[i, j]), (xs[i + 1], ys[j], V[i + 1, j]),
                       (xs[i + 1], ys[j + 1], V[i + 1, j + 1]), (xs[i], ys[j + 1], V[i, j + 1])]
            if any(not math.isfinite(c[2]) for c in corners):
                continue
            pts = []
            for k in range(4):
                (xa, ya, va), (xb, yb, vb) = corners[k], corners[(k + 1) % 4]
                if (va < 0) != (vb < 0):
                    t = va / (va - vb)
                    pts.append((xa + t * (xb - xa), ya + t * (yb - ya)))
            if len(pts) == 2:
                segs.append((pts[0], pts[1]))
            elif len(pts) == 4:  # saddle: pair edges in order
                segs += [(pts[0], pts[1]), (pts[2], pts[3])]
    return segs


def heatmap(xs: Sequence[float], ys: Sequence[float], values, *, xlabel: str, ylabel: str, title: str,
            contour: float | None = None, center: float | None = None) -> str:
    """Cells colored by ``values[i, j]`` at ``(xs[i], ys[j])``; optional contour line.

    With ``center`` the color scale is diverging around that value.
    """
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    V = np.asarray(values, float)
    xe, ye = _edges(xs), _edges(ys)
    fr = _Frame((xe[0], xe[-1]), (ye[0], ye[-1]))
    finite = V[np.isfinite(V)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if center is not None:
        half = max(abs(hi - center), abs(center - lo), 1e-300)
        lo, hi = center - half, center + half
    span = hi - lo if hi > lo else 1.0
    body = []
    for i in range(len(xs)):
        for j in range(len(ys)):
            v = V[i, j]
            color = "#bbbbbb" if not math.isfinite(v) else _diverging((v - lo) / span)
            x0, x1 = fr.X(xe[i]), fr.X(xe[i + 1])
            y0, y1 = fr.Y(ye[j + 1]), fr.Y(ye[j])
            body.append(f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(x1 - x0 + 0.3)}" '
                        f'height="{_fmt(y1 - y0 + 0.3)}" fill="{color}"/>')
    if contour is not None:
        path = " ".join(f"M{_fmt(fr.X(a[0]))},{_fmt(fr.Y(a[1]))} L{_fmt(fr.X(b[0]))},{_fmt(fr.Y(b[1]))}"
                        for a, b in contour_segments(xs, ys, V, contour))
        if path:
            body.append(f'<path d="{path}" stroke="black" stroke-width="2" fill="none"/>')
    # color bar
    bx = WIDTH - MARGIN["right"] + 20
    for k in range(50):
        t = k / 49
        y = MARGIN["top"] + (1 - t) * (fr.ph - fr.ph / 50)
        body.append(f'<rect x="{bx}" y="{_fmt(y)}" width="16" height="{_fmt(fr.ph / 50 + 0.5)}" fill="{_diverging(t)}"/>')
    body.append(f'<text x="{bx + 20}" y="{MARGIN["top"] + 8}" font-size="10">{hi:.3g}</text>')
    body.append(f'<text x="{bx + 20}" y="{MARGIN["top"] + fr.ph}" font-size="10">{lo:.3g}</text>')
    return _document(fr.axes(xlabel, ylabel, title) + body)


def line_plot(curves: Sequence[tuple[str, Sequence[float], Sequence[float]]], *, xlabel: str, ylabel: str,
              title: str, fill_to: float | None = None) -> str:
    """Polylines ``(label, xs, ys)``; with ``fill_to`` each curve is shaded down to that y value."""
    allx = np.concatenate([np.asarray(c[1], float) for c in curves if len(c[1])] or [np.array([0.0, 1.0])])
    ally = np.concatenate([np.asarray(c[2], float) for c in curves if len(c[2])] or [np.array([0.0, 1.0])])
    ylo = min(float(ally.min()), fill_to) if fill_to is not None else float(ally.min())
    yhi = float(ally.max())
    if yhi <= ylo:
        yhi = ylo + 1.0
    xlo, xhi = float(allx.min()), float(allx.max())
    if xhi <= xlo:
        xhi = xlo + 1.0
    fr = _Frame((xlo, xhi), (ylo, yhi + 0.05 * (yhi - ylo)))
    body = []
    for k, (label, xs, ys) in enumerate(curves):
        color = PALETTE[k % len(PALETTE)]
        pts = [(fr.X(x), fr.Y(y)) for x, y in zip(xs, ys)]
        if not pts:
            continue
        if fill_to is not None:
            poly = pts + [(pts[-1][0], fr.Y(fill_to)), (pts[0][0], fr.Y(fill_to))]
            body.append('<polygon points="' + " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in poly)
                        + f'" fill="{color}" fill-opacity="0.25" stroke="none"/>')
        body.append('<polyline points="' + " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts)
                    + f'" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = MARGIN["top"] + 14 * k + 10
        body.append(f'<text x="{WIDTH - MARGIN["right"] + 8}" y="{ly}" font-size="11" fill="{color}">{escape(label)}</text>')
    return _document(fr.axes(xlabel, ylabel, title) + body)
