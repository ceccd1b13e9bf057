"""Fixed quadrature rules used to reduce analytic fields onto a mesh."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

# 4-point Gauss-Legendre on [0, 1]; exact for polynomials of degree 7
_gl_x, _gl_w = np.polynomial.legendre.leggauss(4)
LINE_NODES = 0.5 * (_gl_x + 1.0)
LINE_WEIGHTS = 0.5 * _gl_w

# Radon's 7-point rule on the reference triangle (barycentric, weights sum to 1);
# exact for degree 5.  A 3-point rule is only degree 2, which makes the cell
# reduction third order on triangles.
_a1 = (6.0 - np.sqrt(15.0)) / 21.0
_a2 = (6.0 + np.sqrt(15.0)) / 21.0
_w1 = (155.0 - np.sqrt(15.0)) / 1200.0
_w2 = (155.0 + np.sqrt(15.0)) / 1200.0
TRIANGLE_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_a1, _a1, 1 - 2 * _a1], [_a1, 1 - 2 * _a1, _a1], [1 - 2 * _a1, _a1, _a1],
    [_a2, _a2, 1 - 2 * _a2], [_a2, 1 - 2 * _a2, _a2], [1 - 2 * _a2, _a2, _a2],
])
TRIANGLE_WEIGHTS = np.array([9 / 40, _w1, _w1, _w1, _w2, _w2, _w2])


def line_points(p0, p1):
    """Quadrature points (n, q, 2) and weights (q,) for segments p0 -> p1 of shape (n, 2)."""
    pts = p0[:, None, :] + LINE_NODES[None, :, None] * (p1 - p0)[:, None, :]
    return pts, LINE_WEIGHTS


def polygon_rule(polygons):
    """Points, weights and owning-polygon index for fan-triangulated polygons.

    Each polygon is split into triangles sharing the mean of its vertices;
    weights include the triangle areas, so ``sum(w * f(p))`` per owner is the
    cell integral.
    """
    pts, wts, owner = [], [], []
    for i, poly in enumerate(polygons):
        center = poly.mean(axis=0)
        nxt = np.roll(poly, -1, axis=0)
        for a, b in zip(poly, nxt):
            area = 0.5 * ((a[0] - center[0]) * (b[1] - center[1])
                          - (b[0] - center[0]) * (a[1] - center[1]))
            tri = np.array([a, b, center])
            pts.append(TRIANGLE_BARY @ tri)
            wts.append(area * TRIANGLE_WEIGHTS)
            owner.append(np.full(len(TRIANGLE_WEIGHTS), i))
    return np.concatenate(pts), np.concatenate(wts), np.concatenate(owner)


@lru_cache(maxsize=32)
def cell_rule(mesh, grid):
    g = mesh.geometry
    polys = g.cell_polygons if grid == "straight" else g.tcell_polygons
    return polygon_rule(polys)
