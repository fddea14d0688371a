"""Tiny SVG writers: scatter and line plots with plain axes. Figures are for
eyeballing only; the CSVs next to them are the ground truth."""

from __future__ import annotations

import numpy as np

_W, _H = 640, 480
_MARGIN = 50
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _limits(arrays):
    lo = min(float(np.min(a)) for a in arrays if len(a))
    hi = max(float(np.max(a)) for a in arrays if len(a))
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _mapper(xlim, ylim):
    def to_px(x, y):
        px = _MARGIN + (x - xlim[0]) / (xlim[1] - xlim[0]) * (_W - 2 * _MARGIN)
        py = _H - _MARGIN - (y - ylim[0]) / (ylim[1] - ylim[0]) * (_H - 2 * _MARGIN)
        return px, py

    return to_px


def _frame(title, xlim, ylim):
    to_px = _mapper(xlim, ylim)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W/2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]
    x0, y0 = to_px(xlim[0], ylim[0])
    x1, y1 = to_px(xlim[1], ylim[1])
    parts.append(
        f'<path d="M {x0} {y1} L {x0} {y0} L {x1} {y0}" stroke="black" fill="none"/>'
    )
    for t in np.linspace(xlim[0], xlim[1], 5):
        px, py = to_px(t, ylim[0])
        parts.append(f'<line x1="{px}" y1="{py}" x2="{px}" y2="{py + 5}" stroke="black"/>')
        parts.append(
            f'<text x="{px}" y="{py + 18}" text-anchor="middle" font-size="10">{t:.3g}</text>'
        )
    for t in np.linspace(ylim[0], ylim[1], 5):
        px, py = to_px(xlim[0], t)
        parts.append(f'<line x1="{px - 5}" y1="{py}" x2="{px}" y2="{py}" stroke="black"/>')
        parts.append(
            f'<text x="{px - 8}" y="{py + 3}" text-anchor="end" font-size="10">{t:.3g}</text>'
        )
    return parts, to_px


def scatter_svg(path, groups, title="", labels=None) -> None:
    """groups: list of (n, 2) arrays plotted in distinct colors."""
    groups = [np.atleast_2d(np.asarray(g, dtype=float)) for g in groups]
    xlim = _limits([g[:, 0] for g in groups])
    ylim = _limits([g[:, 1] for g in groups])
    parts, to_px = _frame(title, xlim, ylim)
    for gi, g in enumerate(groups):
        color = _COLORS[gi % len(_COLORS)]
        for x, y in g:
            px, py = to_px(x, y)
            parts.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="1.5" fill="{color}" fill-opacity="0.5"/>')
        if labels:
            parts.append(
                f'<text x="{_W - _MARGIN}" y="{35 + 14 * gi}" text-anchor="end" '
                f'font-size="11" fill="{color}">{labels[gi]}</text>'
            )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


def line_svg(path, series, title="", labels=None) -> None:
    """series: list of (xs, ys) pairs drawn as polylines."""
    series = [(np.asarray(x, dtype=float), np.asarray(y, dtype=float)) for x, y in series]
    xlim = _limits([x for x, _ in series])
    ylim = _limits([y for _, y in series])
    parts, to_px = _frame(title, xlim, ylim)
    for si, (xs, ys) in enumerate(series):
        color = _COLORS[si % len(_COLORS)]
        pts = " ".join(f"{to_px(x, y)[0]:.1f},{to_px(x, y)[1]:.1f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" stroke="{color}" stroke-width="1.5" fill="none"/>')
        for x, y in zip(xs, ys):
            px, py = to_px(x, y)
            parts.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="2.5" fill="{color}"/>')
        if labels:
            parts.append(
                f'<text x="{_W - _MARGIN}" y="{35 + 14 * si}" text-anchor="end" '
                f'font-size="11" fill="{color}">{labels[si]}</text>'
            )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
