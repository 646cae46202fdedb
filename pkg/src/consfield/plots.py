"""Self-contained SVG line plots and quiver plots."""
from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT, MARGIN = 480, 360, 48
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _f(v: float) -> str:
    return f"{v:.2f}"


def _header(w, h, title):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<title>{escape(title)}</title>',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
    ]


def _range(lo, hi):
    if not np.isfinite(lo) or not np.isfinite(hi):
        return 0.0, 1.0
    if hi - lo < 1e-12:
        pad = max(abs(lo), 1.0) * 0.05
        return lo - pad, hi + pad
    return lo, hi


def line_plot(series: dict, xlabel: str = "epoch", ylabel: str = "", title: str = "") -> str:
    """Polyline chart of ``{label: (xs, ys)}``."""
    xs_all = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys_all = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    ys_all = ys_all[np.isfinite(ys_all)]
    x0, x1 = _range(float(xs_all.min()), float(xs_all.max()))
    y0, y1 = _range(float(ys_all.min()) if ys_all.size else 0.0, float(ys_all.max()) if ys_all.size else 1.0)
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def sx(x):
        return MARGIN + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph

    out = _header(WIDTH, HEIGHT, title)
    out.append(f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for i, (label, (xs, ys)) in enumerate(series.items()):
        pts = [(sx(x), sy(y)) for x, y in zip(xs, ys) if np.isfinite(y)]
        color = COLORS[i % len(COLORS)]
        coords = " ".join(f"{_f(a)},{_f(b)}" for a, b in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        out.append(f'<text x="{MARGIN + 8}" y="{MARGIN + 16 + 14 * i}" font-size="12" fill="{color}">{escape(label)}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{HEIGHT / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {HEIGHT / 2})">{escape(ylabel)}</text>')
    out.append(f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 14}" font-size="10">{x0:.4g}</text>')
    out.append(f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 14}" font-size="10" text-anchor="end">{x1:.4g}</text>')
    out.append(f'<text x="{MARGIN - 4}" y="{HEIGHT - MARGIN}" font-size="10" text-anchor="end">{y0:.4g}</text>')
    out.append(f'<text x="{MARGIN - 4}" y="{MARGIN + 10}" font-size="10" text-anchor="end">{y1:.4g}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="20" font-size="14" text-anchor="middle">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def quiver(points: Sequence, vectors: Sequence, spacing: float, title: str = "", size: int = 400) -> str:
    """One arrow (line plus triangular head) per grid node.

    The longest arrow spans 0.8 grid spacings; the rest scale linearly.
    """
    P = np.asarray(points, float)
    V = np.asarray(vectors, float)
    lo, hi = P.min(axis=0), P.max(axis=0)
    pad = spacing
    span = np.maximum(hi - lo + 2 * pad, 1e-12)
    scale_px = (size - 2 * MARGIN) / span.max()
    mags = np.linalg.norm(V, axis=1)
    vmax = mags.max() if mags.size and mags.max() > 0 else 1.0
    k = 0.8 * spacing / vmax

    def to_px(q):
        return MARGIN + (q[0] - lo[0] + pad) * scale_px, size - MARGIN - (q[1] - lo[1] + pad) * scale_px

    out = _header(size, size, title)
    out.append('<g class="arrows" stroke="#1f3b73" fill="#1f3b73">')
    for p, v in zip(P, V):
        x0, y0 = to_px(p)
        x1, y1 = to_px(p + k * v)
        dx, dy = x1 - x0, y1 - y0
        n = np.hypot(dx, dy)
        if n > 0:
            ux, uy = dx / n, dy / n
        else:
            ux, uy = 1.0, 0.0
        hl = max(min(0.35 * n, 6.0), 1.5)
        hw = 0.5 * hl
        bx, by = x1 - ux * hl, y1 - uy * hl
        tri = f"{_f(x1)},{_f(y1)} {_f(bx - uy * hw)},{_f(by + ux * hw)} {_f(bx + uy * hw)},{_f(by - ux * hw)}"
        out.append(f'<g class="arrow"><line x1="{_f(x0)}" y1="{_f(y0)}" x2="{_f(x1)}" y2="{_f(y1)}" '
                   f'stroke-width="1"/><polygon points="{tri}"/></g>')
    out.append("</g>")
    if title:
        out.append(f'<text x="{size / 2}" y="20" font-size="14" text-anchor="middle">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
