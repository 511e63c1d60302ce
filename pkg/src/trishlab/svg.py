"""Self-contained log-log line plots written as plain SVG."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def loglog_svg(series: dict, title: str = "", xlabel: str = "t", ylabel: str = "",
               width: int = 640, height: int = 420) -> str:
    """Render ``{label: (t, y)}`` as polylines on log-log axes with decade gridlines.

    Non-positive and non-finite points are dropped.
    """
    clean = {}
    for label, (t, y) in series.items():
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        m = np.isfinite(t) & np.isfinite(y) & (t > 0) & (y > 0)
        if np.count_nonzero(m) >= 2:
            clean[label] = (np.log10(t[m]), np.log10(y[m]))
    ml, mr, mt, mb = 70, 20, 36, 48
    pw, ph = width - ml - mr, height - mt - mb
    if clean:
        xs = np.concatenate([v[0] for v in clean.values()])
        ys = np.concatenate([v[1] for v in clean.values()])
        x0, x1 = math.floor(xs.min()), math.ceil(xs.max())
        y0, y1 = math.floor(ys.min()), math.ceil(ys.max())
    else:
        x0, x1, y0, y1 = 0, 1, 0, 1
    x1 = max(x1, x0 + 1)
    y1 = max(y1, y0 + 1)

    def px(u):
        return ml + (u - x0) / (x1 - x0) * pw

    def py(u):
        return mt + (y1 - u) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    ystep = max(1, (y1 - y0 + 9) // 10)
    for k in range(x0, x1 + 1):
        X = px(k)
        out.append(f'<line x1="{X:.2f}" y1="{mt}" x2="{X:.2f}" y2="{mt + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{X:.2f}" y="{mt + ph + 16}" text-anchor="middle">1e{k}</text>')
    for k in range(y0, y1 + 1, ystep):
        Y = py(k)
        out.append(f'<line x1="{ml}" y1="{Y:.2f}" x2="{ml + pw}" y2="{Y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{ml - 6}" y="{Y + 4:.2f}" text-anchor="end">1e{k}</text>')
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>')
    for i, (label, (lx, ly)) in enumerate(clean.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(lx, ly))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.4" points="{pts}"/>')
        ly_ = mt + 14 + 16 * i
        out.append(f'<line x1="{ml + pw - 110}" y1="{ly_ - 4}" x2="{ml + pw - 90}" y2="{ly_ - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw - 84}" y="{ly_}">{escape(str(label))}</text>')
    out.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_loglog_svg(path, series: dict, **kw) -> None:
    with open(path, "w") as fh:
        fh.write(loglog_svg(series, **kw))
