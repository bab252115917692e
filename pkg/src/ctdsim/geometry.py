"""Segment intersection for wall occlusion.

Touching counts as crossing: a segment that ends on a wall, passes through
a wall's endpoint or runs collinearly along a wall intersects it.
"""

from __future__ import annotations

import numpy as np

Point = tuple[float, float]
Segment = tuple[float, float, float, float]

# pair-by-wall cells evaluated per numpy block
_BLOCK_CELLS = 1 << 21


def _orient(ax, ay, bx, by, cx, cy):
    return np.sign((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))


def _on_segment(ax, ay, bx, by, cx, cy):
    """c lies inside the bounding box of a-b (caller has checked collinearity)."""
    return ((np.minimum(ax, bx) <= cx) & (cx <= np.maximum(ax, bx))
            & (np.minimum(ay, by) <= cy) & (cy <= np.maximum(ay, by)))


def _intersects(p1x, p1y, p2x, p2y, q1x, q1y, q2x, q2y):
    o1 = _orient(p1x, p1y, p2x, p2y, q1x, q1y)
    o2 = _orient(p1x, p1y, p2x, p2y, q2x, q2y)
    o3 = _orient(q1x, q1y, q2x, q2y, p1x, p1y)
    o4 = _orient(q1x, q1y, q2x, q2y, p2x, p2y)
    proper = (o1 * o2 < 0) & (o3 * o4 < 0)
    touch = ((o1 == 0) & _on_segment(p1x, p1y, p2x, p2y, q1x, q1y)
             | (o2 == 0) & _on_segment(p1x, p1y, p2x, p2y, q2x, q2y)
             | (o3 == 0) & _on_segment(q1x, q1y, q2x, q2y, p1x, p1y)
             | (o4 == 0) & _on_segment(q1x, q1y, q2x, q2y, p2x, p2y))
    return proper | touch


def segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    return bool(_intersects(*p1, *p2, *q1, *q2))


def count_crossings(a: np.ndarray, b: np.ndarray, walls: np.ndarray) -> np.ndarray:
    """Number of walls crossed by each segment ``a[i]``-``b[i]``.

    ``a`` and ``b`` are (M, 2) arrays, ``walls`` an (E, 4) array of
    ``x1, y1, x2, y2`` rows.
    """
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    walls = np.asarray(walls, dtype=float).reshape(-1, 4)
    m, e = len(a), len(walls)
    out = np.zeros(m, dtype=np.int64)
    if m == 0 or e == 0:
        return out
    q1x, q1y, q2x, q2y = (walls[:, k][None, :] for k in range(4))
    wx0, wx1 = np.minimum(q1x, q2x), np.maximum(q1x, q2x)
    wy0, wy1 = np.minimum(q1y, q2y), np.maximum(q1y, q2y)
    block = max(1, _BLOCK_CELLS // e)
    for start in range(0, m, block):
        sl = slice(start, start + block)
        p1x, p1y = a[sl, 0][:, None], a[sl, 1][:, None]
        p2x, p2y = b[sl, 0][:, None], b[sl, 1][:, None]
        # bounding-box rejection before the orientation tests
        near = ((np.minimum(p1x, p2x) <= wx1) & (wx0 <= np.maximum(p1x, p2x))
                & (np.minimum(p1y, p2y) <= wy1) & (wy0 <= np.maximum(p1y, p2y)))
        rows, cols = np.nonzero(near)
        if len(rows) == 0:
            continue
        hit = _intersects(p1x[rows, 0], p1y[rows, 0], p2x[rows, 0], p2y[rows, 0],
                          q1x[0, cols], q1y[0, cols], q2x[0, cols], q2y[0, cols])
        out[sl] += np.bincount(rows[hit], minlength=len(p1x))
    return out
