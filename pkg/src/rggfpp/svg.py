"""Deterministic SVG snapshots of planar graphs, reached sets and fitted balls."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import UnsupportedDimensionError

SIZE = 800
COLORS = {
    "frame": "#000000",
    "vertex": "#9a9a9a",
    "edge": "#cfcfcf",
    "giant": "#1f4e9c",
    "open": "#d62728",
    "reached": "#f5b041",
    "ball": "#2ca02c",
}


def _num(v):
    return f"{v:.3f}"


def emit_svg(box, points=(), edges=(), giant=None, reached=None, open_edges=None, circles=(), path=None):
    """Render a 2-d snapshot; the same inputs always give the same bytes.

    ``giant`` and ``reached`` are boolean vertex masks, ``open_edges`` a
    boolean edge mask, ``circles`` radii of circles centred at the origin.
    """
    if box.d != 2:
        raise UnsupportedDimensionError(f"SVG snapshots are 2-d only, got d={box.d}")
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    scale = SIZE / (2 * box.L)

    def xy(p):
        return (p[..., 0] - box.lower[0]) * scale, (box.upper[1] - p[..., 1]) * scale

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="none" stroke="{COLORS["frame"]}"/>',
    ]
    if len(edges):
        X, Y = xy(points)
        in_giant = np.zeros(len(edges), bool) if giant is None else np.asarray(giant)[edges[:, 0]]
        is_open = np.zeros(len(edges), bool) if open_edges is None else np.asarray(open_edges, bool)
        for (u, v), g_e, o_e in zip(edges.tolist(), in_giant.tolist(), is_open.tolist()):
            color = COLORS["open"] if o_e else COLORS["giant"] if g_e else COLORS["edge"]
            out.append(
                f'<line x1="{_num(X[u])}" y1="{_num(Y[u])}" x2="{_num(X[v])}" y2="{_num(Y[v])}" '
                f'stroke="{color}" stroke-width="0.6"/>'
            )
    if len(points):
        X, Y = xy(points)
        g_mask = np.zeros(len(points), bool) if giant is None else np.asarray(giant, bool)
        r_mask = np.zeros(len(points), bool) if reached is None else np.asarray(reached, bool)
        for x, y, g_v, r_v in zip(X.tolist(), Y.tolist(), g_mask.tolist(), r_mask.tolist()):
            color = COLORS["reached"] if r_v else COLORS["giant"] if g_v else COLORS["vertex"]
            out.append(f'<circle cx="{_num(x)}" cy="{_num(y)}" r="1.5" fill="{color}"/>')
    cx, cy = xy(np.zeros(2))
    for rad in circles:
        out.append(
            f'<circle cx="{_num(cx)}" cy="{_num(cy)}" r="{_num(rad * scale)}" fill="none" '
            f'stroke="{COLORS["ball"]}" stroke-width="1.2" stroke-dasharray="6,4"/>'
        )
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def graph_svg(g, path=None, reached=None, open_edges=None, circles=()):
    """Snapshot of a Geograph with its giant component highlighted."""
    giant = g.labels == g.giant if g.n else None
    return emit_svg(g.ps.box, g.points, g.edges, giant, reached, open_edges, circles, path)
