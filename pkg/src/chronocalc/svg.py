"""
Minimal SVG writer for line, log-log and heat-map plots.

Output depends only on the data: coordinates are printed with fixed
precision and nothing time- or platform-dependent is embedded.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

W, H = 640, 420
MARGIN = 60


def _f(v):
    return f"{v:.2f}"


def _frame(title, xlabel, ylabel):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{MARGIN}" y="{MARGIN // 2}" width="{W - MARGIN - 20}" '
        f'height="{H - MARGIN - MARGIN // 2}" fill="none" stroke="black"/>',
        f'<text x="{W // 2}" y="18" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        f'<text x="{W // 2}" y="{H - 12}" text-anchor="middle" font-size="12">{_esc(xlabel)}</text>',
        f'<text x="14" y="{H // 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {H // 2})">{_esc(ylabel)}</text>',
    ]


def _esc(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _scale(vals, lo_px, hi_px):
    lo, hi = float(np.min(vals)), float(np.max(vals))
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    return lambda v: lo_px + (v - lo) / (hi - lo) * (hi_px - lo_px), lo, hi


def line_plot(xs, ys, title="", xlabel="x", ylabel="y", log=False, annotation=None) -> str:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size == 0 or xs.size != ys.size:
        raise DomainError("plot needs matching, nonempty x and y")
    if log:
        if np.any(xs <= 0) or np.any(ys <= 0):
            raise DomainError("log-log plot needs positive data")
        xs, ys = np.log10(xs), np.log10(ys)
    sx, xlo, xhi = _scale(xs, MARGIN, W - 20)
    sy, ylo, yhi = _scale(ys, H - MARGIN, MARGIN // 2)
    out = _frame(title, ("log10 " if log else "") + xlabel, ("log10 " if log else "") + ylabel)
    pts = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in zip(xs, ys))
    out.append(f'<polyline points="{pts}" fill="none" stroke="navy" stroke-width="1.5"/>')
    for x, y in zip(xs, ys):
        out.append(f'<circle cx="{_f(sx(x))}" cy="{_f(sy(y))}" r="3" fill="navy"/>')
    for v, px in ((xlo, MARGIN), (xhi, W - 20)):
        out.append(f'<text x="{_f(px)}" y="{H - MARGIN + 16}" text-anchor="middle" '
                   f'font-size="10">{v:.3g}</text>')
    for v, py in ((ylo, H - MARGIN), (yhi, MARGIN // 2)):
        out.append(f'<text x="{MARGIN - 4}" y="{_f(py + 4)}" text-anchor="end" '
                   f'font-size="10">{v:.3g}</text>')
    if annotation:
        out.append(f'<text x="{W - 30}" y="{MARGIN // 2 + 20}" text-anchor="end" '
                   f'font-size="13" fill="darkred">{_esc(annotation)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def heatmap(xs, ys, values, title="|K|", xlabel="x", ylabel="y") -> str:
    """Cells coloured by ``values[i, j]`` at ``(xs[j], ys[i])``, grey scale."""
    V = np.asarray(values, dtype=float)
    if V.size == 0:
        raise DomainError("heat map needs data")
    lo, hi = float(V.min()), float(V.max())
    span = hi - lo if hi > lo else 1.0
    out = _frame(title, xlabel, ylabel)
    ny, nx = V.shape
    cw = (W - MARGIN - 20) / nx
    ch = (H - MARGIN - MARGIN // 2) / ny
    for i in range(ny):
        for j in range(nx):
            level = int(round(255 * (1.0 - (V[i, j] - lo) / span)))
            out.append(f'<rect x="{_f(MARGIN + j * cw)}" y="{_f(H - MARGIN - (i + 1) * ch)}" '
                       f'width="{_f(cw + 0.05)}" height="{_f(ch + 0.05)}" '
                       f'fill="rgb({level},{level},{level})"/>')
    out.append(f'<text x="{W - 30}" y="{MARGIN // 2 + 20}" text-anchor="end" font-size="11">'
               f'range [{lo:.3g}, {hi:.3g}]</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def fitted_slope(xs, ys) -> float:
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    if lx.size < 2:
        return math.nan
    return float(np.polyfit(lx, ly, 1)[0])
