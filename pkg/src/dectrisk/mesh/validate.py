"""Invariant checks for a :class:`MeshPair`.  Failures are returned, not raised."""
from __future__ import annotations

import numpy as np

from .geometry import ORTHOGONALITY_TOL, crossing_alignment
from .topology import induce_twisted_orientation

AREA_RTOL = 1e-12


def _is_permutation(a, n):
    a = np.asarray(a)
    return a.shape == (n,) and np.array_equal(np.sort(a), np.arange(n))


def validate_topology(t):
    fails = []
    nv, ne, nc = t.n_vertices, t.n_edges, t.n_cells
    ev = t.edge_vertices
    if ev.shape != (ne, 2) or len(t.cell_edges) != nc or len(t.cell_signs) != nc:
        return ["size: incidence arrays do not match element counts"]
    if ev.size and (ev.min() < 0 or ev.max() >= nv):
        fails.append("edge-vertices: vertex id out of range")
    if np.any(ev[:, 0] == ev[:, 1]):
        fails.append("edge-vertices: edge with coincident endpoints")

    plus = np.zeros(ne, dtype=int)
    minus = np.zeros(ne, dtype=int)
    for edges, signs in zip(t.cell_edges, t.cell_signs):
        if len(edges) != len(signs) or len(edges) < 3:
            fails.append("edge-cells: malformed cell boundary loop")
            break
        if edges.min() < 0 or edges.max() >= ne:
            fails.append("edge-cells: edge id out of range")
            break
        if not np.all(np.abs(signs) == 1):
            fails.append("orientation: n_ec must be +1 or -1")
            break
        np.add.at(plus, edges[signs > 0], 1)
        np.add.at(minus, edges[signs < 0], 1)
    if np.any(plus + minus != 2):
        fails.append("edge-cells: every edge must bound exactly 2 cells")
    elif np.any(plus != 1):
        fails.append("orientation: each edge must be traversed once each way by its two cells")

    if t.euler_characteristic != 0:
        fails.append(f"euler: V - E + F = {t.euler_characteristic}, expected 0")

    try:
        d2d1 = abs(t.cell_edge_matrix @ t.edge_vertex_matrix)
        if d2d1.nnz and d2d1.max() != 0:
            fails.append("orientation: D2 D1 != 0 (inconsistent n_ec / t_ve)")
    except (ValueError, IndexError):
        fails.append("orientation: cannot assemble D2 D1")

    for name, arr, n in [("vertex", t.dual_of_vertex, nv), ("edge", t.dual_of_edge, ne),
                         ("cell", t.dual_of_cell, nc)]:
        if not _is_permutation(arr, n):
            fails.append(f"duality: {name} map is not a bijection")

    if not fails:
        tedge, tce, tcs, tcc = induce_twisted_orientation(ev, t.cell_edges, t.cell_signs, nv)
        same = np.array_equal(tedge, t.tedge_vertices) and len(tce) == len(t.tcell_edges)
        same = same and all(np.array_equal(a, b) for a, b in zip(tce, t.tcell_edges))
        same = same and all(np.array_equal(a, b) for a, b in zip(tcs, t.tcell_signs))
        if not same:
            fails.append("twisted-orientation: not induced from straight orientation")
        if any(len(a) != len(b) for a, b in zip(t.tcell_edges, t.tcell_cells)):
            fails.append("twisted-cells: open loop around a vertex")
        loops = sum(len(x) for x in t.tcell_edges)
        if loops != 2 * ne:
            fails.append("twisted-cells: vertex loops do not cover every edge twice")
        dd = abs(t.tcell_tedge_matrix @ t.tedge_tvertex_matrix)
        if dd.nnz and dd.max() != 0:
            fails.append("twisted-orientation: D~2 D~1 != 0")
        for e in range(min(ne, 64)):
            ecp = set(t.ECP(e))
            composed = {x for c in t.CE(e) for x in t.EC(c)}
            if ecp != composed:
                fails.append("stencil: ECP(e) != EC(CE(e))")
                break
    return fails


def validate_geometry(mesh):
    t, g = mesh.topology, mesh.geometry
    fails = []
    for name, arr in [("edge length", g.edge_length), ("twisted edge length", g.tedge_length),
                      ("cell area", g.cell_area), ("twisted cell area", g.tcell_area),
                      ("extended edge area", g.kite_area)]:
        if not np.all(np.asarray(arr) > 0):
            fails.append(f"positivity: {name} not strictly positive")
    if g.cell_area.shape != (t.n_cells,) or g.tcell_area.shape != (t.n_vertices,):
        return fails + ["size: geometry arrays do not match topology"]

    def close(a, b):
        return np.all(np.abs(a - b) <= AREA_RTOL * np.maximum(np.abs(b), 1e-300) + 1e-15)

    ov = g.cell_overlap
    if not close(np.asarray(ov.sum(axis=1)).ravel(), g.tcell_area):
        fails.append("overlap-partition: sum_c A(c~,c) != A(c~)")
    if not close(np.asarray(ov.sum(axis=0)).ravel(), g.cell_area):
        fails.append("overlap-partition: sum_c~ A(c~,c) != A(c)")
    if not close(np.asarray(g.kite_overlap.sum(axis=0)).ravel(), g.kite_area):
        fails.append("overlap-partition: sum A(c~,e~) != extended edge area")
    dom = g.domain_area
    if not close(np.array([g.cell_area.sum(), g.tcell_area.sum()]), np.array([dom, dom])):
        fails.append("domain-area: cell areas do not sum to the domain area")
    aligned = bool(np.all(crossing_alignment(g) <= ORTHOGONALITY_TOL))
    if aligned != mesh.orthogonal:
        fails.append("orthogonality: flag disagrees with measured crossing alignment")
    return fails


def validate_mesh(mesh):
    """List of failed invariants; an empty list means the mesh is valid."""
    fails = validate_topology(mesh.topology)
    if fails:
        return fails
    return validate_geometry(mesh)
