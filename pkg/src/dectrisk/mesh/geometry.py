"""Metric data of a periodic dual mesh pair.

Positions live in the fundamental domain spanned by the two columns of
``lattice``.  Every straight edge carries an integer lattice shift so that
``vertex_xy[head] + lattice @ shift - vertex_xy[tail]`` is the edge vector;
all other unwrapped coordinates (cell polygons, twisted edges, kites) are
reconstructed from those vectors.  The minimum-image convention is only used
to place a twisted vertex inside its own straight cell, where the offset is
much smaller than the period.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import shapely

ORTHOGONALITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MeshGeometry:
    lattice: np.ndarray  # (2, 2), columns are the periods
    vertex_xy: np.ndarray  # (V, 2)
    tvertex_xy: np.ndarray  # (C, 2) twisted vertices
    edge_shift: np.ndarray  # (E, 2) int
    edge_length: np.ndarray  # A_e
    tedge_length: np.ndarray  # A_e~
    cell_area: np.ndarray  # A_c
    tcell_area: np.ndarray  # A_c~
    cell_overlap: sp.csr_matrix  # (V, C): A_{c~,c}
    kite_area: np.ndarray  # extended edge area
    kite_overlap: sp.csr_matrix  # (V, E): A_{c~,e~}
    # unwrapped helpers used by reduction and clipping
    edge_points: np.ndarray  # (E, 2, 2) tail, head
    tedge_points: np.ndarray  # (E, 2, 2) twisted tail, head
    cell_polygons: tuple  # CCW vertex coordinates per cell
    tcell_polygons: tuple  # CCW vertex coordinates per twisted cell

    @property
    def domain_area(self):
        return abs(float(np.linalg.det(self.lattice)))

    def wrap(self, xy):
        """Map points into the fundamental domain."""
        frac = np.linalg.solve(self.lattice, np.asarray(xy, float).T).T
        frac -= np.floor(frac)
        return frac @ self.lattice.T


def edge_vectors(lattice, vertex_xy, edge_vertices, edge_shift):
    return (vertex_xy[edge_vertices[:, 1]] + edge_shift @ lattice.T
            - vertex_xy[edge_vertices[:, 0]])


def unwrap_cells(topology, vertex_xy, evec):
    """Cell polygons with the first traversal vertex at its stored position.

    Returns the polygons and, per cell, an array giving for each loop position
    the straight vertex id found there.
    """
    polys, corner_ids = [], []
    ev = topology.edge_vertices
    for edges, signs in zip(topology.cell_edges, topology.cell_signs):
        start = ev[edges[0], 0] if signs[0] > 0 else ev[edges[0], 1]
        pts = [vertex_xy[start]]
        ids = []
        for e, s in zip(edges, signs):
            ids.append(ev[e, 0] if s > 0 else ev[e, 1])
            pts.append(pts[-1] + s * evec[e])
        polys.append(np.array(pts))
        corner_ids.append(np.array(ids))
    return polys, corner_ids


def polygon_area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _near_image(point, anchor, lattice):
    d = np.linalg.solve(lattice, point - anchor)
    d -= np.round(d)
    return anchor + lattice @ d


def _clip_area(a, b):
    return float(shapely.intersection(shapely.Polygon(a), shapely.Polygon(b)).area)


def compute_geometry(topology, lattice, vertex_xy, edge_shift, tvertex_xy):
    lattice = np.asarray(lattice, float)
    vertex_xy = np.asarray(vertex_xy, float)
    tvertex_xy = np.asarray(tvertex_xy, float)
    edge_shift = np.asarray(edge_shift, dtype=np.int64)
    ev = topology.edge_vertices
    nv, ne, nc = topology.n_vertices, topology.n_edges, topology.n_cells

    evec = edge_vectors(lattice, vertex_xy, ev, edge_shift)
    edge_length = np.hypot(evec[:, 0], evec[:, 1])
    edge_points = np.stack([vertex_xy[ev[:, 0]], vertex_xy[ev[:, 0]] + evec], axis=1)

    closed, corner_ids = unwrap_cells(topology, vertex_xy, evec)
    polys = [p[:-1] for p in closed]
    cell_area = np.array([polygon_area(p) for p in polys])
    centers = []
    for p in polys:
        centers.append(_near_image(tvertex_xy[len(centers)], p.mean(axis=0), lattice))

    # twisted edges in the frame of their straight edge (tail at its stored position)
    tedge_points = np.zeros((ne, 2, 2))
    for c, (edges, signs) in enumerate(zip(topology.cell_edges, topology.cell_signs)):
        p = closed[c]
        for i, (e, s) in enumerate(zip(edges, signs)):
            tail_here = p[i] if s > 0 else p[i + 1]
            shift = edge_points[e, 0] - tail_here
            tedge_points[e, 1 if s > 0 else 0] = centers[c] + shift
    tvec = tedge_points[:, 1] - tedge_points[:, 0]
    tedge_length = np.hypot(tvec[:, 0], tvec[:, 1])

    # twisted cell polygons around each straight vertex, in that vertex's frame
    offset_in_cell = {}
    for c in range(nc):
        for i, v in enumerate(corner_ids[c]):
            offset_in_cell[(int(v), c)] = centers[c] - polys[c][i]
    tpolys = []
    for v in range(nv):
        pts = [vertex_xy[v] + offset_in_cell[(v, int(c))] for c in topology.tcell_cells[v]]
        tpolys.append(np.array(pts).reshape(-1, 2))
    tcell_area = np.array([polygon_area(p) for p in tpolys])

    rows, cols, vals = [], [], []
    for c in range(nc):
        for i, v in enumerate(corner_ids[c]):
            v = int(v)
            shifted = tpolys[v] + (polys[c][i] - vertex_xy[v])
            rows.append(v)
            cols.append(c)
            vals.append(_clip_area(polys[c], shifted))
    cell_overlap = sp.csr_matrix((vals, (rows, cols)), shape=(nv, nc))

    kite_area = np.zeros(ne)
    rows, cols, vals = [], [], []
    for e in range(ne):
        pt, ph = edge_points[e]
        cr, cl = tedge_points[e]
        kite = np.array([pt, cr, ph, cl])
        kite_area[e] = polygon_area(kite)
        for end, v in enumerate(ev[e]):
            anchor = edge_points[e, end]
            shifted = tpolys[v] + (anchor - vertex_xy[v])
            rows.append(int(v))
            cols.append(e)
            vals.append(_clip_area(kite, shifted))
    kite_overlap = sp.csr_matrix((vals, (rows, cols)), shape=(nv, ne))

    def frozen(a):
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        return a

    return MeshGeometry(
        lattice=frozen(lattice),
        vertex_xy=frozen(vertex_xy),
        tvertex_xy=frozen(tvertex_xy),
        edge_shift=frozen(edge_shift),
        edge_length=frozen(edge_length),
        tedge_length=frozen(tedge_length),
        cell_area=frozen(cell_area),
        tcell_area=frozen(tcell_area),
        cell_overlap=cell_overlap,
        kite_area=frozen(kite_area),
        kite_overlap=kite_overlap,
        edge_points=frozen(edge_points),
        tedge_points=frozen(tedge_points),
        cell_polygons=tuple(frozen(p) for p in polys),
        tcell_polygons=tuple(frozen(p) for p in tpolys),
    )


def crossing_alignment(geometry):
    """|t.m - 1| per edge, where m is the unit normal of the twisted edge.

    The normal is the twisted tangent turned clockwise, so it equals the
    straight tangent on an orthogonal mesh.
    """
    t = geometry.edge_points[:, 1] - geometry.edge_points[:, 0]
    s = geometry.tedge_points[:, 1] - geometry.tedge_points[:, 0]
    t = t / np.linalg.norm(t, axis=1)[:, None]
    s = s / np.linalg.norm(s, axis=1)[:, None]
    m = np.stack([s[:, 1], -s[:, 0]], axis=1)
    return np.abs(np.sum(t * m, axis=1) - 1.0)
