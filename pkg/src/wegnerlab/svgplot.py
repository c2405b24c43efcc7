"""Line plots as standalone SVG, no plotting dependency.

Good enough for curve-plus-band and log-log scaling plots; formatting is
deterministic so plot files reproduce byte-identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Series", "line_plot"]

WIDTH, HEIGHT = 760, 500
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 72, 20, 40, 56
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


@dataclass(frozen=True, eq=False)
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target, 2)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 0.5 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list[float]:
    d0, d1 = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    ticks = [10.0**d for d in range(d0, d1 + 1) if lo <= 10.0**d <= hi]
    if len(ticks) >= 2:
        return ticks
    return [t for t in _nice_ticks(lo, hi) if t > 0.0]


def line_plot(series, title: str = "", xlabel: str = "", ylabel: str = "",
              logx: bool = False, logy: bool = False, band=None) -> str:
    """Render series as polylines; ``band`` is an optional (x, lo, hi) fill."""
    xs, ys = [], []
    for s in series:
        x = np.asarray(s.x, dtype=float)
        y = np.asarray(s.y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if logx:
            keep &= x > 0.0
        if logy:
            keep &= y > 0.0
        xs.append(x[keep])
        ys.append(y[keep])
    allx = np.concatenate([v for v in xs if v.size] or [np.array([0.0, 1.0])])
    ally = np.concatenate([v for v in ys if v.size] or [np.array([0.0, 1.0])])
    if band is not None:
        ally = np.concatenate([ally, np.asarray(band[1], float), np.asarray(band[2], float)])
        ally = ally[np.isfinite(ally)]
        if logy:
            ally = ally[ally > 0.0]

    def span(v, log):
        lo, hi = float(np.min(v)), float(np.max(v))
        if log:
            if hi <= 0.0:  # nothing positive to show
                lo, hi = 0.1, 10.0
            elif lo <= 0.0:
                lo = hi / 1e3
            pad = (hi / lo) ** 0.05 if hi > lo else 2.0
            return lo / pad, hi * pad
        pad = 0.05 * (hi - lo) if hi > lo else max(1.0, abs(hi))
        return lo - pad, hi + pad

    x0, x1 = span(allx, logx)
    y0, y1 = span(ally, logy)
    tx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    ty = (lambda v: math.log10(v)) if logy else (lambda v: v)
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(v):
        return MARGIN_L + (tx(v) - tx(x0)) / (tx(x1) - tx(x0)) * pw

    def sy(v):
        return MARGIN_T + ph - (ty(v) - ty(y0)) / (ty(y1) - ty(y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           '<g font-family="monospace" font-size="12" fill="#202020">']
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" '
                   f'font-size="14">{_esc(title)}</text>')

    xticks = _log_ticks(x0, x1) if logx else _nice_ticks(x0, x1)
    yticks = _log_ticks(y0, y1) if logy else _nice_ticks(y0, y1)
    for t in xticks:
        px = sx(t)
        out.append(f'<line x1="{px:.2f}" y1="{MARGIN_T}" x2="{px:.2f}" '
                   f'y2="{MARGIN_T + ph}" stroke="#dddddd"/>')
        out.append(f'<text x="{px:.2f}" y="{MARGIN_T + ph + 18}" '
                   f'text-anchor="middle">{_fmt(t)}</text>')
    for t in yticks:
        py = sy(t)
        out.append(f'<line x1="{MARGIN_L}" y1="{py:.2f}" x2="{MARGIN_L + pw}" '
                   f'y2="{py:.2f}" stroke="#dddddd"/>')
        out.append(f'<text x="{MARGIN_L - 6}" y="{py + 4:.2f}" '
                   f'text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" '
               f'fill="none" stroke="#202020"/>')
    if xlabel:
        out.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="{HEIGHT - 14}" '
                   f'text-anchor="middle">{_esc(xlabel)}</text>')
    if ylabel:
        cy = MARGIN_T + ph / 2
        out.append(f'<text x="18" y="{cy:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 18 {cy:.1f})">{_esc(ylabel)}</text>')

    if band is not None:
        bx = np.asarray(band[0], float)
        blo = np.asarray(band[1], float)
        bhi = np.asarray(band[2], float)
        keep = np.isfinite(bx) & np.isfinite(blo) & np.isfinite(bhi)
        if logy:
            keep &= (blo > 0.0) & (bhi > 0.0)
        if logx:
            keep &= bx > 0.0
        bx, blo, bhi = bx[keep], blo[keep], bhi[keep]
        if bx.size >= 2:
            pts = [f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(bx, bhi)]
            pts += [f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(bx[::-1], blo[::-1])]
            out.append(f'<polygon points="{" ".join(pts)}" fill="#1f77b4" '
                       f'fill-opacity="0.15" stroke="none"/>')

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        x, y = xs[i], ys[i]
        if x.size:
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                       f'stroke-width="1.6"/>')
        ly = MARGIN_T + 16 + 16 * i
        out.append(f'<line x1="{MARGIN_L + pw - 150}" y1="{ly - 4}" '
                   f'x2="{MARGIN_L + pw - 126}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="1.6"/>')
        out.append(f'<text x="{MARGIN_L + pw - 120}" y="{ly}">{_esc(s.label)}</text>')

    out.append("</g></svg>")
    return "\n".join(out) + "\n"


def _esc(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))
