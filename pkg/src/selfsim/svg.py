"""Minimal SVG output: patch renders and log-log line charts."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .tiling import Window

PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c")


def _colors(sub):
    return [p.color or PALETTE[i % len(PALETTE)] for i, p in enumerate(sub.prototiles)]


def patch_svg(window: Window, max_tiles: int = 40000, px: float | None = None) -> str:
    """Render the level-0 tiles of a window; y grows upward as in the tiling coordinates."""
    sub = window.sub
    tiles = window.tiles()
    if len(tiles) > max_tiles:
        raise ValueError(f"window has {len(tiles)} tiles, more than max_tiles={max_tiles}")
    ext = np.asarray(window.extent, dtype=float)
    cols = _colors(sub)
    if sub.dimension == 1:
        px = px or max(1.0, 1200.0 / ext[0])
        W, H = ext[0] * px, 40.0
        body = [f'<rect x="{a[0] * px:.3f}" y="0" width="{float(sub.sizes[t][0]) * px:.3f}" height="{H:.0f}" '
                f'fill="{cols[t]}" stroke="#222" stroke-width="0.5"/>' for t, a in zip(tiles.types, tiles.anchors)]
    else:
        px = px or max(1.0, 800.0 / ext.max())
        W, H = ext[0] * px, ext[1] * px
        body = []
        for t, a in zip(tiles.types, tiles.anchors):
            w, h = (float(s) * px for s in sub.sizes[t])
            x, y = float(a[0]) * px, H - float(a[1]) * px - h
            body.append(f'<rect x="{x:.3f}" y="{y:.3f}" width="{w:.3f}" height="{h:.3f}" fill="{cols[t]}" '
                        f'stroke="#222" stroke-width="{min(0.5, px / 8):.3f}"/>')
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" height="{H:.0f}" '
            f'viewBox="0 0 {W:.3f} {H:.3f}">\n<title>{escape(sub.name)} level {window.levels}</title>\n')
    return head + "\n".join(body) + "\n</svg>\n"


def loglog_svg(xs, ys, fit=None, title: str = "", width: int = 480, height: int = 320) -> str:
    """Points (log x, log y) with an optional fitted line (slope, intercept) in natural logs."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    ok = np.isfinite(ly)
    lx, ly = lx[ok], ly[ok]
    if len(lx) == 0:
        raise ValueError("nothing to plot")
    pad = 40
    x0, x1 = lx.min(), lx.max() if lx.max() > lx.min() else lx.min() + 1
    y0, y1 = ly.min(), ly.max() if ly.max() > ly.min() else ly.min() + 1

    def X(v):
        return pad + (v - x0) / (x1 - x0) * (width - 2 * pad)

    def Y(v):
        return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<title>{escape(title)}</title>',
             f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" fill="none" stroke="#888"/>',
             f'<text x="{pad}" y="{pad - 12}" font-size="12" font-family="sans-serif">{escape(title)}</text>']
    pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(lx, ly))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#4c72b0" stroke-width="1.5"/>')
    parts += [f'<circle cx="{X(a):.2f}" cy="{Y(b):.2f}" r="3" fill="#4c72b0"/>' for a, b in zip(lx, ly)]
    if fit is not None:
        s, c = fit
        parts.append(f'<line x1="{X(x0):.2f}" y1="{Y(c + s * x0):.2f}" x2="{X(x1):.2f}" y2="{Y(c + s * x1):.2f}" '
                     f'stroke="#c44e52" stroke-dasharray="4 3"/>')
        parts.append(f'<text x="{width - pad}" y="{height - 12}" font-size="12" text-anchor="end" '
                     f'font-family="sans-serif">slope {s:.4f}</text>')
    parts.append(f'<text x="{pad}" y="{height - 12}" font-size="11" font-family="sans-serif">'
                 f'log R {math.exp(x0):.3g}..{math.exp(x1):.3g}</text>')
    parts.append("</svg>\n")
    return "\n".join(parts)
