"""Minimal self-contained SVG line/scatter plots with error bars.

Output is deterministic: fixed canvas, fixed float formatting, no
timestamps. Only what the batch pipelines need; not a plotting library.
"""

from __future__ import annotations

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 62, 16, 34, 46
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** np.floor(np.log10(raw))
    step = min((s for s in (1, 2, 2.5, 5, 10) if s * mag >= raw),
               default=10) * mag
    start = np.ceil(lo / step) * step
    return [float(start + k * step) for k in
            range(int(np.floor((hi - start) / step)) + 1)]


def line_plot(series: list[dict], title: str = "", xlabel: str = "",
              ylabel: str = "") -> str:
    """Render series to an SVG string.

    Each series dict has keys x, y and optionally yerr, label and
    mode ("line", "markers" or "both").
    """
    xs = np.concatenate([np.asarray(s["x"], dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s["y"], dtype=float) for s in series])
    errs = np.concatenate([np.asarray(s.get("yerr", np.zeros(len(s["y"]))),
                                      dtype=float) for s in series])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo = float((ys - errs).min())
    y_hi = float((ys + errs).max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    pad = 0.06 * (y_hi - y_lo or 1.0)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def px(v: float) -> float:
        return MARGIN_L + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v: float) -> float:
        return MARGIN_T + (y_hi - v) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#444"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="14">{title}</text>')
    for tx in _ticks(x_lo, x_hi):
        if x_lo <= tx <= x_hi:
            out.append(f'<line x1="{px(tx):.1f}" y1="{MARGIN_T + plot_h}" '
                       f'x2="{px(tx):.1f}" y2="{MARGIN_T + plot_h + 4}" stroke="#444"/>')
            out.append(f'<text x="{px(tx):.1f}" y="{MARGIN_T + plot_h + 17}" '
                       f'text-anchor="middle" font-family="sans-serif" '
                       f'font-size="11">{_fmt(tx)}</text>')
    for ty in _ticks(y_lo, y_hi):
        if y_lo <= ty <= y_hi:
            out.append(f'<line x1="{MARGIN_L - 4}" y1="{py(ty):.1f}" '
                       f'x2="{MARGIN_L}" y2="{py(ty):.1f}" stroke="#444"/>')
            out.append(f'<text x="{MARGIN_L - 7}" y="{py(ty):.1f}" dy="0.32em" '
                       f'text-anchor="end" font-family="sans-serif" '
                       f'font-size="11">{_fmt(ty)}</text>')
    if xlabel:
        out.append(f'<text x="{MARGIN_L + plot_w / 2:.1f}" y="{HEIGHT - 10}" '
                   f'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="12">{xlabel}</text>')
    if ylabel:
        cx, cy = 16, MARGIN_T + plot_h / 2
        out.append(f'<text x="{cx}" y="{cy:.1f}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12" '
                   f'transform="rotate(-90 {cx} {cy:.1f})">{ylabel}</text>')

    for idx, s in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        x = np.asarray(s["x"], dtype=float)
        y = np.asarray(s["y"], dtype=float)
        yerr = s.get("yerr")
        mode = s.get("mode", "line")
        if yerr is not None:
            for xi, yi, ei in zip(x, y, np.asarray(yerr, dtype=float)):
                out.append(f'<line x1="{px(xi):.1f}" y1="{py(yi - ei):.1f}" '
                           f'x2="{px(xi):.1f}" y2="{py(yi + ei):.1f}" '
                           f'stroke="{color}" stroke-width="0.8"/>')
        if mode in ("line", "both"):
            pts = " ".join(f"{px(xi):.1f},{py(yi):.1f}" for xi, yi in zip(x, y))
            out.append(f'<polyline points="{pts}" fill="none" '
                       f'stroke="{color}" stroke-width="1.3"/>')
        if mode in ("markers", "both"):
            for xi, yi in zip(x, y):
                out.append(f'<circle cx="{px(xi):.1f}" cy="{py(yi):.1f}" '
                           f'r="2.2" fill="{color}"/>')
        if s.get("label"):
            ly = MARGIN_T + 14 + 15 * idx
            out.append(f'<line x1="{WIDTH - MARGIN_R - 108}" y1="{ly - 4}" '
                       f'x2="{WIDTH - MARGIN_R - 88}" y2="{ly - 4}" '
                       f'stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{WIDTH - MARGIN_R - 84}" y="{ly}" '
                       f'font-family="sans-serif" font-size="11">{s["label"]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
