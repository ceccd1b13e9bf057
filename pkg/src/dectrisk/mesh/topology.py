"""Combinatorial structure of a straight grid and its twisted dual.

Index conventions
-----------------
Twisted elements are numbered by the straight element they are dual to:
twisted vertex ``c`` sits inside straight cell ``c``, twisted edge ``e``
crosses straight edge ``e`` and twisted cell ``v`` surrounds straight vertex
``v``.  The duality bijections are therefore stored explicitly (for
validation and file I/O) but are the identity after construction.

Orientation symbols use vertex-then-edge index order:

* ``t_ve`` is -1 at the tail and +1 at the head of edge ``e``;
* ``n_ec`` is +1 when edge ``e`` is traversed along its tangent by the
  counterclockwise boundary loop of cell ``c``, -1 otherwise.

The twisted orientations are induced from these (see
:func:`induce_twisted_orientation`).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp


def _frozen(a, dtype=np.int64):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _ragged(rows, dtype=np.int64):
    return tuple(_frozen(r, dtype) for r in rows)


def vertex_corners(edge_vertices, cell_edges, cell_signs):
    """Map ``(vertex, outgoing edge) -> (cell, next edge)`` in CCW order around the vertex.

    At the corner of cell ``c`` where its CCW loop leaves vertex ``v`` along
    edge ``e_out`` after arriving along ``e_in``, the cell occupies the
    angular sector that starts at ``e_out`` and ends at ``e_in`` when turning
    counterclockwise about ``v``.
    """
    corners = {}
    for c, (edges, signs) in enumerate(zip(cell_edges, cell_signs)):
        m = len(edges)
        for i in range(m):
            e, s = int(edges[i]), int(signs[i])
            v = int(edge_vertices[e, 0] if s > 0 else edge_vertices[e, 1])
            corners[(v, e)] = (c, int(edges[i - 1]))
    return corners


def induce_twisted_orientation(edge_vertices, cell_edges, cell_signs, n_vertices):
    """Derive the twisted complex from the straight one.

    Returns ``(tedge_vertices, tcell_edges, tcell_signs, tcell_cells)``:

    * twisted edge ``e`` runs from the cell with ``n_ec = -1`` to the cell
      with ``n_ec = +1``, i.e. ``t~_{v~e~} = n_ec``;
    * twisted cell ``v`` lists the edges around ``v`` counterclockwise with
      sign ``n~_{e~c~} = -t_ve``;
    * ``tcell_cells[v][k]`` is the straight cell (twisted vertex) lying
      between ``tcell_edges[v][k]`` and ``tcell_edges[v][k+1]``.
    """
    edge_vertices = np.asarray(edge_vertices)
    n_edges = len(edge_vertices)
    tedge = np.full((n_edges, 2), -1, dtype=np.int64)
    for c, (edges, signs) in enumerate(zip(cell_edges, cell_signs)):
        for e, s in zip(edges, signs):
            tedge[e, 1 if s > 0 else 0] = c

    corners = vertex_corners(edge_vertices, cell_edges, cell_signs)
    start_edge = {}
    for (v, e) in corners:
        start_edge.setdefault(v, e)

    tcell_edges, tcell_signs, tcell_cells = [], [], []
    for v in range(n_vertices):
        loop_e, loop_c = [], []
        e = start_edge.get(v)
        while e is not None and len(loop_e) <= n_edges:
            loop_e.append(e)
            c, e = corners.get((v, e), (None, None))
            if c is None:
                break
            loop_c.append(c)
            if e == loop_e[0]:
                break
        loop_e = np.array(loop_e, dtype=np.int64)
        t_ve = np.where(edge_vertices[loop_e, 1] == v, 1, -1) if len(loop_e) else []
        tcell_edges.append(loop_e)
        tcell_signs.append(-np.asarray(t_ve, dtype=np.int64))
        tcell_cells.append(np.array(loop_c, dtype=np.int64))
    return tedge, tcell_edges, tcell_signs, tcell_cells


@dataclass(frozen=True, eq=False)
class MeshTopology:
    """Incidence and orientation data of both grids (see module docstring)."""

    n_vertices: int
    n_edges: int
    n_cells: int
    edge_vertices: np.ndarray  # (E, 2) straight [tail, head]
    cell_edges: tuple  # per cell, edges of the CCW boundary loop
    cell_signs: tuple  # per cell, n_ec along the loop
    tedge_vertices: np.ndarray  # (E, 2) twisted [tail, head] as straight-cell ids
    tcell_edges: tuple  # per twisted cell (straight vertex), CCW edge loop
    tcell_signs: tuple  # per twisted cell, n~ = -t_ve along the loop
    tcell_cells: tuple  # per twisted cell, twisted vertices (straight cells) CCW
    dual_of_vertex: np.ndarray
    dual_of_edge: np.ndarray
    dual_of_cell: np.ndarray

    @classmethod
    def from_straight(cls, n_vertices, edge_vertices, cell_edges, cell_signs):
        edge_vertices = _frozen(edge_vertices)
        tedge, tce, tcs, tcc = induce_twisted_orientation(
            edge_vertices, cell_edges, cell_signs, n_vertices)
        n_cells = len(cell_edges)
        return cls(
            n_vertices=int(n_vertices),
            n_edges=len(edge_vertices),
            n_cells=n_cells,
            edge_vertices=edge_vertices,
            cell_edges=_ragged(cell_edges),
            cell_signs=_ragged(cell_signs),
            tedge_vertices=_frozen(tedge),
            tcell_edges=_ragged(tce),
            tcell_signs=_ragged(tcs),
            tcell_cells=_ragged(tcc),
            dual_of_vertex=_frozen(np.arange(n_vertices)),
            dual_of_edge=_frozen(np.arange(len(edge_vertices))),
            dual_of_cell=_frozen(np.arange(n_cells)),
        )

    # twisted counts, named for readability at call sites
    @property
    def n_tvertices(self):
        return self.n_cells

    @property
    def n_tedges(self):
        return self.n_edges

    @property
    def n_tcells(self):
        return self.n_vertices

    def count(self, k, grid="straight"):
        """Number of k-cells on ``grid``."""
        straight = (self.n_vertices, self.n_edges, self.n_cells)
        return straight[k] if grid == "straight" else straight[2 - k]

    @property
    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_cells

    # --- signed incidence matrices -------------------------------------
    @cached_property
    def edge_vertex_matrix(self):
        """(E, V) matrix of t_ve."""
        e = np.repeat(np.arange(self.n_edges), 2)
        v = self.edge_vertices.ravel()
        s = np.tile([-1.0, 1.0], self.n_edges)
        return sp.csr_matrix((s, (e, v)), shape=(self.n_edges, self.n_vertices))

    @cached_property
    def cell_edge_matrix(self):
        """(C, E) matrix of n_ec."""
        return _ragged_matrix(self.cell_edges, self.cell_signs, self.n_edges)

    @cached_property
    def tedge_tvertex_matrix(self):
        """(E~, V~) matrix of t~."""
        e = np.repeat(np.arange(self.n_edges), 2)
        v = self.tedge_vertices.ravel()
        s = np.tile([-1.0, 1.0], self.n_edges)
        return sp.csr_matrix((s, (e, v)), shape=(self.n_edges, self.n_cells))

    @cached_property
    def tcell_tedge_matrix(self):
        """(C~, E~) matrix of n~."""
        return _ragged_matrix(self.tcell_edges, self.tcell_signs, self.n_edges)

    # --- stencils ------------------------------------------------------
    def VE(self, e):
        return tuple(int(v) for v in self.edge_vertices[e])

    def EC(self, c):
        return tuple(int(e) for e in self.cell_edges[c])

    def CE(self, e):
        """Cells sharing edge ``e`` (right, left); equal to the twisted vertices of e~."""
        return tuple(int(c) for c in self.tedge_vertices[e])

    def VC(self, c):
        out = []
        for e, s in zip(self.cell_edges[c], self.cell_signs[c]):
            out.append(int(self.edge_vertices[e, 0 if s > 0 else 1]))
        return tuple(out)

    def CV(self, v):
        return tuple(int(c) for c in self.tcell_cells[v])

    def EV(self, v):
        return tuple(int(e) for e in self.tcell_edges[v])

    def ECP(self, e):
        """Edges of the cells sharing ``e``, i.e. EC(CE(e))."""
        out = []
        for c in self.CE(e):
            out.extend(self.EC(c))
        return tuple(out)

    def tECP(self, e):
        """Twisted counterpart of ECP: edges of the twisted cells sharing e~."""
        out = []
        for v in self.VE(e):
            out.extend(self.EV(v))
        return tuple(out)

    @cached_property
    def valence(self):
        """|CV(v)| for every straight vertex."""
        return np.array([len(c) for c in self.tcell_cells], dtype=np.int64)


def _ragged_matrix(rows, signs, n_cols):
    r = np.concatenate([np.full(len(x), i) for i, x in enumerate(rows)])
    c = np.concatenate(rows)
    s = np.concatenate(signs).astype(float)
    # duplicates are summed, which is what a signed incidence wants
    return sp.csr_matrix((s, (r, c)), shape=(len(rows), n_cols))
