"""Minimal dependency-free SVG figures: heatmaps and line plots.

Output is deterministic (fixed number formatting, no timestamps).
"""
from __future__ import annotations

import numpy as np

# viridis anchors, interpolated linearly
_VIRIDIS = np.array([
    [68, 1, 84], [72, 35, 116], [64, 67, 135], [52, 94, 141], [41, 120, 142],
    [32, 144, 140], [34, 167, 132], [68, 190, 112], [121, 209, 81], [189, 222, 38], [253, 231, 37],
], dtype=float)

MISSING = "#bdbdbd"         # failed grid points
PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]


def colormap(v) -> str:
    v = float(np.clip(v, 0, 1)) if np.isfinite(v) else 0.0
    x = v * (len(_VIRIDIS) - 1)
    i = min(int(x), len(_VIRIDIS) - 2)
    c = _VIRIDIS[i] + (x - i) * (_VIRIDIS[i + 1] - _VIRIDIS[i])
    return "#%02x%02x%02x" % tuple(int(round(k)) for k in c)


def _f(x) -> str:
    return f"{x:.2f}"


class _Panel:
    def __init__(self, x0, y0, w, h, xlim, ylim, xlog=False):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        self.xlim, self.ylim, self.xlog = xlim, ylim, xlog

    def px(self, x):
        lo, hi = self.xlim
        if self.xlog:
            x, lo, hi = np.log(x), np.log(lo), np.log(hi)
        return self.x0 + (np.asarray(x) - lo) / (hi - lo) * self.w

    def py(self, y):
        lo, hi = self.ylim
        return self.y0 + self.h - (np.asarray(y) - lo) / (hi - lo) * self.h

    def axes(self, xlabel, ylabel, title="", nticks=5):
        out = [f'<rect x="{_f(self.x0)}" y="{_f(self.y0)}" width="{_f(self.w)}" height="{_f(self.h)}" '
               'fill="none" stroke="black"/>']
        if self.xlog:
            xt = np.geomspace(*self.xlim, nticks)
        else:
            xt = np.linspace(*self.xlim, nticks)
        for x in xt:
            px = self.px(x)
            out.append(f'<line x1="{_f(px)}" y1="{_f(self.y0 + self.h)}" x2="{_f(px)}" '
                       f'y2="{_f(self.y0 + self.h + 4)}" stroke="black"/>')
            out.append(f'<text x="{_f(px)}" y="{_f(self.y0 + self.h + 16)}" font-size="10" '
                       f'text-anchor="middle">{x:.3g}</text>')
        for y in np.linspace(*self.ylim, nticks):
            py = self.py(y)
            out.append(f'<line x1="{_f(self.x0 - 4)}" y1="{_f(py)}" x2="{_f(self.x0)}" y2="{_f(py)}" stroke="black"/>')
            out.append(f'<text x="{_f(self.x0 - 6)}" y="{_f(py + 3)}" font-size="10" text-anchor="end">{y:.3g}</text>')
        out.append(f'<text x="{_f(self.x0 + self.w / 2)}" y="{_f(self.y0 + self.h + 32)}" font-size="12" '
                   f'text-anchor="middle">{_esc(xlabel)}</text>')
        out.append(f'<text x="{_f(self.x0 - 40)}" y="{_f(self.y0 + self.h / 2)}" font-size="12" text-anchor="middle" '
                   f'transform="rotate(-90 {_f(self.x0 - 40)} {_f(self.y0 + self.h / 2)})">{_esc(ylabel)}</text>')
        if title:
            out.append(f'<text x="{_f(self.x0 + self.w / 2)}" y="{_f(self.y0 - 8)}" font-size="13" '
                       f'text-anchor="middle">{_esc(title)}</text>')
        return out

    def polyline(self, x, y, color, dash=None, width=1.5):
        x, y = np.asarray(x, float), np.asarray(y, float)
        ok = np.isfinite(x) & np.isfinite(y) & (y >= self.ylim[0]) & (y <= self.ylim[1])
        segs, cur = [], []
        for xi, yi, good in zip(x, y, ok):
            if good:
                cur.append(f"{_f(self.px(xi))},{_f(self.py(yi))}")
            elif cur:
                segs.append(cur)
                cur = []
        if cur:
            segs.append(cur)
        d = f' stroke-dasharray="{dash}"' if dash else ""
        return [f'<polyline points="{" ".join(s)}" fill="none" stroke="{color}" stroke-width="{width}"{d}/>'
                for s in segs if len(s) > 1]


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _doc(width, height, body) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif">')
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>', *body, "</svg>"]) + "\n"


def _edges(v, log: bool) -> np.ndarray:
    """Cell edges at midpoints between samples (geometric midpoints on log axes)."""
    v = np.asarray(v, float)
    if log:
        m = np.sqrt(v[1:] * v[:-1])
        return np.concatenate([[v[0] ** 2 / m[0]], m, [v[-1] ** 2 / m[-1]]])
    m = (v[1:] + v[:-1]) / 2
    return np.concatenate([[2 * v[0] - m[0]], m, [2 * v[-1] - m[-1]]])


def _heat_panel(x0, y0, w, h, x, y, xlog) -> _Panel:
    ex, ey = _edges(x, xlog), _edges(y, False)
    return _Panel(x0, y0, w, h, (ex[0], ex[-1]), (ey[0], ey[-1]), xlog)


def _cells(panel: _Panel, x, y, z, vmin, vmax):
    ex, ey = _edges(x, panel.xlog), _edges(y, False)
    out = []
    for i in range(len(x)):
        x0, x1 = panel.px(ex[i]), panel.px(ex[i + 1])
        for j in range(len(y)):
            y0, y1 = panel.py(ey[j + 1]), panel.py(ey[j])
            val = (z[i, j] - vmin) / (vmax - vmin) if vmax > vmin else 0.0
            fill = colormap(val) if np.isfinite(z[i, j]) else MISSING
            out.append(f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{_f(x1 - x0 + 0.3)}" height="{_f(y1 - y0 + 0.3)}" '
                       f'fill="{fill}"/>')
    return out


def _colorbar(x0, y0, h, vmin, vmax, label):
    out = []
    n = 50
    for k in range(n):
        yy = y0 + h - (k + 1) * h / n
        out.append(f'<rect x="{_f(x0)}" y="{_f(yy)}" width="12" height="{_f(h / n + 0.3)}" fill="{colormap(k / (n - 1))}"/>')
    out.append(f'<rect x="{_f(x0)}" y="{_f(y0)}" width="12" height="{_f(h)}" fill="none" stroke="black"/>')
    for v in np.linspace(vmin, vmax, 5):
        yy = y0 + h - (v - vmin) / (vmax - vmin) * h if vmax > vmin else y0 + h
        out.append(f'<text x="{_f(x0 + 16)}" y="{_f(yy + 3)}" font-size="10">{v:.3g}</text>')
    out.append(f'<text x="{_f(x0)}" y="{_f(y0 - 6)}" font-size="11">{_esc(label)}</text>')
    return out


def heatmap_svg(x, y, z, xlabel="", ylabel="", title="", zlabel="", xlog=False, vmin=None, vmax=None,
                overlays=(), width=560, height=440) -> str:
    """``z[i, j]`` at ``(x[i], y[j])``; overlays are ``(x, y, color, dash)`` tuples."""
    z = np.asarray(z, float)
    vmin = np.nanmin(z) if vmin is None else vmin
    vmax = np.nanmax(z) if vmax is None else vmax
    panel = _heat_panel(70, 30, width - 170, height - 80, x, y, xlog)
    body = _cells(panel, x, y, z, vmin, vmax)
    for ox, oy, color, dash in overlays:
        body += panel.polyline(ox, oy, color, dash, 1.2)
    body += panel.axes(xlabel, ylabel, title)
    body += _colorbar(width - 85, 30, height - 80, vmin, vmax, zlabel)
    return _doc(width, height, body)


def line_svg(series, xlabel="", ylabel="", title="", xlog=False, ylim=None, vlines=(), width=560, height=380) -> str:
    """``series`` is a list of ``(x, y, label)``; ``vlines`` of ``(x, color, dash)``."""
    xs = np.concatenate([np.asarray(s[0], float) for s in series])
    ys = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = ys[np.isfinite(ys)]
    if ylim is None:
        pad = 0.05 * (ys.max() - ys.min() or 1.0)
        ylim = (ys.min() - pad, ys.max() + pad)
    panel = _Panel(70, 30, width - 190, height - 80, (xs.min(), xs.max()), ylim, xlog)
    body = []
    for k, (x, y, label) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        body += panel.polyline(x, y, color)
        ly = 40 + 16 * k
        body.append(f'<line x1="{width - 110}" y1="{ly}" x2="{width - 90}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        body.append(f'<text x="{width - 85}" y="{ly + 4}" font-size="11">{_esc(label)}</text>')
    for xv, color, dash in vlines:
        px = panel.px(xv)
        body.append(f'<line x1="{_f(px)}" y1="{_f(panel.y0)}" x2="{_f(px)}" y2="{_f(panel.y0 + panel.h)}" '
                    f'stroke="{color}" stroke-dasharray="{dash}"/>')
    body += panel.axes(xlabel, ylabel, title)
    return _doc(width, height, body)


def two_heatmaps_svg(left: dict, right: dict, width=1000, height=420) -> str:
    """Side-by-side heatmaps sharing one color scale (dicts of heatmap arguments)."""
    vmin = min(np.nanmin(left["z"]), np.nanmin(right["z"]))
    vmax = max(np.nanmax(left["z"]), np.nanmax(right["z"]))
    body = []
    half = (width - 100) // 2
    for k, spec in enumerate((left, right)):
        panel = _heat_panel(70 + k * half, 30, half - 90, height - 80, spec["x"], spec["y"], False)
        body += _cells(panel, spec["x"], spec["y"], np.asarray(spec["z"], float), vmin, vmax)
        for ox, oy, color, dash in spec.get("overlays", ()):
            body += panel.polyline(ox, oy, color, dash, 1.2)
        body += panel.axes(spec.get("xlabel", ""), spec.get("ylabel", ""), spec.get("title", ""))
    body += _colorbar(width - 60, 30, height - 80, vmin, vmax, left.get("zlabel", ""))
    return _doc(width, height, body)
