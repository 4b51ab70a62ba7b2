"""Deterministic static SVG plots of data, fitted model and residuals.

Output depends only on the inputs: fixed canvas, fixed number formatting,
no timestamps or random ids. Each panel group carries its data-to-pixel
mapping as ``data-*`` attributes so the plotted paths can be checked
structurally without rasterizing.
"""
from __future__ import annotations

from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .dataio import atomic_write
from .errors import ValidationError

__all__ = ["render_fit_svg", "fit_svg_text"]

WIDTH, HEIGHT = 640, 480
MAIN = (80.0, 30.0, 620.0, 330.0)  # x0, y0, x1, y1 in px
STRIP = (80.0, 370.0, 620.0, 440.0)


def _fmt(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _label(v: float) -> str:
    return f"{v:.4g}"


def _range(*arrays):
    vals = np.concatenate([np.asarray(a, dtype=float).ravel() for a in arrays if a is not None and len(a)])
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return -1.0, 1.0
    lo, hi = float(vals.min()), float(vals.max())
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
    else:
        pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


class _Axes:
    def __init__(self, box, xr, yr):
        self.x0, self.y0, self.x1, self.y1 = box
        self.xr, self.yr = xr, yr

    def px(self, x):
        return self.x0 + (np.asarray(x, dtype=float) - self.xr[0]) / (self.xr[1] - self.xr[0]) * (self.x1 - self.x0)

    def py(self, y):
        return self.y1 - (np.asarray(y, dtype=float) - self.yr[0]) / (self.yr[1] - self.yr[0]) * (self.y1 - self.y0)

    def attrs(self, logx):
        return (f'data-xmin="{self.xr[0]!r}" data-xmax="{self.xr[1]!r}" data-ymin="{self.yr[0]!r}" '
                f'data-ymax="{self.yr[1]!r}" data-px0="{_fmt(self.x0)}" data-px1="{_fmt(self.x1)}" '
                f'data-py0="{_fmt(self.y0)}" data-py1="{_fmt(self.y1)}" data-logx="{int(logx)}"')


def _ticks(lo, hi, n=5):
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def _panel(out, ax: _Axes, gid, x, y, model_x, model_y, logx, ylabel, zero_line):
    out.append(f'<g id="{gid}" {ax.attrs(logx)}>')
    out.append(f'<rect x="{_fmt(ax.x0)}" y="{_fmt(ax.y0)}" width="{_fmt(ax.x1 - ax.x0)}" '
               f'height="{_fmt(ax.y1 - ax.y0)}" fill="none" stroke="#444" stroke-width="1"/>')
    if zero_line and ax.yr[0] < 0 < ax.yr[1]:
        yz = _fmt(float(ax.py(0.0)))
        out.append(f'<line class="zero" x1="{_fmt(ax.x0)}" y1="{yz}" x2="{_fmt(ax.x1)}" y2="{yz}" '
                   'stroke="#999" stroke-dasharray="4 3"/>')
    for t in _ticks(*ax.yr):
        yt = _fmt(float(ax.py(t)))
        out.append(f'<text x="{_fmt(ax.x0 - 6)}" y="{yt}" font-size="10" text-anchor="end" '
                   f'dominant-baseline="middle">{escape(_label(t))}</text>')
    out.append(f'<text x="18" y="{_fmt(0.5 * (ax.y0 + ax.y1))}" font-size="11" text-anchor="middle" '
               f'transform="rotate(-90 18 {_fmt(0.5 * (ax.y0 + ax.y1))})">{escape(ylabel)}</text>')
    pts = [(a, b) for a, b in zip(ax.px(x), ax.py(y)) if np.isfinite(a) and np.isfinite(b)]
    out.append(f'<g class="points" id="{gid}-data" fill="#1f5fa8">')
    for a, b in pts:
        out.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="2.5"/>')
    out.append("</g>")
    if model_y is not None:
        mp = [(a, b) for a, b in zip(ax.px(model_x), ax.py(model_y)) if np.isfinite(a) and np.isfinite(b)]
        if mp:
            d = "M " + " L ".join(f"{_fmt(a)} {_fmt(b)}" for a, b in mp)
            out.append(f'<path id="{gid}-model" d="{d}" fill="none" stroke="#c0392b" stroke-width="1.5"/>')
    out.append("</g>")


def fit_svg_text(x, y, model_y, residuals, model_x: Optional[Sequence[float]] = None, title: str = "",
                 xlabel: str = "", ylabel: str = "", logx: bool = False) -> str:
    """SVG document text; see :func:`render_fit_svg`."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size == 0:
        raise ValidationError("x and y must be non-empty 1-D arrays of equal length")
    model_x = x if model_x is None else np.asarray(model_x, dtype=float)
    model_y = None if model_y is None else np.asarray(model_y, dtype=float)
    res = None if residuals is None else np.asarray(residuals, dtype=float)
    if logx:
        if np.any(x <= 0) or np.any(model_x <= 0):
            raise ValidationError("log x axis needs positive x values")
        x, model_x = np.log10(x), np.log10(model_x)
    xr = _range(x, model_x)
    main = _Axes(MAIN, xr, _range(y, model_y))
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
        f"<title>{escape(title)}</title>",
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{_fmt(0.5 * (MAIN[0] + MAIN[2]))}" y="18" font-size="13" text-anchor="middle">{escape(title)}</text>',
    ]
    _panel(out, main, "main", x, y, model_x, model_y, logx, ylabel, zero_line=True)
    if res is not None:
        if res.shape != x.shape:
            raise ValidationError("residuals must match the data length")
        lim = float(np.max(np.abs(res[np.isfinite(res)]))) if np.any(np.isfinite(res)) else 1.0
        lim = lim * 1.1 if lim > 0 else 1.0
        strip = _Axes(STRIP, xr, (-lim, lim))
        _panel(out, strip, "residuals", x, res, None, None, logx, "residual", zero_line=True)
    axis = STRIP if res is not None else MAIN
    for t in _ticks(*xr):
        xt = _fmt(float(main.px(t)))
        lab = _label(10**t if logx else t)
        out.append(f'<text x="{xt}" y="{_fmt(axis[3] + 14)}" font-size="10" text-anchor="middle">{escape(lab)}</text>')
    out.append(f'<text x="{_fmt(0.5 * (MAIN[0] + MAIN[2]))}" y="{HEIGHT - 8}" font-size="11" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_fit_svg(x, y, model_y, residuals, path, model_x=None, title: str = "", xlabel: str = "",
                   ylabel: str = "", logx: bool = False):
    """Write a data-plus-model plot with a residual strip to `path`.

    Raises ``OSError`` if `path` cannot be written.
    """
    text = fit_svg_text(x, y, model_y, residuals, model_x=model_x, title=title, xlabel=xlabel,
                        ylabel=ylabel, logx=logx)
    atomic_write(path, text.encode("utf-8"))
    return path
