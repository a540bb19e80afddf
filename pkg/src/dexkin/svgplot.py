"""Minimal deterministic SVG scatter plots (three orthographic projections)."""

from __future__ import annotations

import numpy as np

_PANEL = 240
_MARGIN = 34
_PROJECTIONS = (("x", "y", 0, 1), ("x", "z", 0, 2), ("y", "z", 1, 2))


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def scatter_projections(points: np.ndarray, title: str) -> str:
    """Three side-by-side axis-aligned projections of a 3-D point set."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    width = 3 * _PANEL + 4 * _MARGIN
    height = _PANEL + 2 * _MARGIN + 16
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text x="{_MARGIN}" y="18" font-family="monospace" font-size="13">{title}'
        f" ({points.shape[0]} points)</text>",
    ]
    if points.shape[0] > 0:
        lo = points.min(axis=0)
        span = np.maximum(points.max(axis=0) - lo, 1e-9)
    else:
        lo = np.zeros(3)
        span = np.ones(3)
    for p, (xl, yl, xi, yi) in enumerate(_PROJECTIONS):
        ox = _MARGIN + p * (_PANEL + _MARGIN)
        oy = _MARGIN + 16
        out.append(
            f'<rect x="{ox}" y="{oy}" width="{_PANEL}" height="{_PANEL}" '
            'fill="none" stroke="black" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{ox + _PANEL // 2}" y="{oy + _PANEL + 14}" font-family="monospace" '
            f'font-size="11" text-anchor="middle">{xl} / {yl} (m)</text>'
        )
        if points.shape[0] == 0:
            continue
        xs = (points[:, xi] - lo[xi]) / span[xi] * (_PANEL - 12) + 6
        ys = (points[:, yi] - lo[yi]) / span[yi] * (_PANEL - 12) + 6
        for x, y in zip(xs, ys):
            cx = ox + x
            cy = oy + _PANEL - y  # flip so the second axis points up
            out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="1.5" fill="#1f6fb2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
