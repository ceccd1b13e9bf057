from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidMeshSize
from .geometry import ORTHOGONALITY_TOL, MeshGeometry, compute_geometry, crossing_alignment
from .topology import MeshTopology


@dataclass(frozen=True, eq=False)
class MeshPair:
    """A straight grid, its twisted dual, and their geometry.

    ``kind``/``n``/``spacing`` record how the mesh was generated
    (``kind="custom"`` otherwise); some operator choices are only available
    on particular generated families.
    """

    topology: MeshTopology
    geometry: MeshGeometry
    orthogonal: bool
    kind: str = "custom"
    n: int = 0
    spacing: float = 0.0

    @property
    def label(self):
        if self.kind == "custom":
            return "custom"
        return f"{self.kind}({self.n},{self.spacing:g})"

    def __repr__(self):
        t = self.topology
        return (f"MeshPair({self.label}: V={t.n_vertices}, E={t.n_edges}, "
                f"C={t.n_cells}, orthogonal={self.orthogonal})")


def assemble_mesh(n_vertices, edge_vertices, cell_edges, cell_signs, lattice,
                  vertex_xy, edge_shift, tvertex_xy, kind="custom", n=0, spacing=0.0):
    topology = MeshTopology.from_straight(n_vertices, edge_vertices, cell_edges, cell_signs)
    geometry = compute_geometry(topology, lattice, vertex_xy, edge_shift, tvertex_xy)
    orthogonal = bool(np.all(crossing_alignment(geometry) <= ORTHOGONALITY_TOL))
    return MeshPair(topology, geometry, orthogonal, kind, int(n), float(spacing))


def _cell_centers(lattice, vertex_xy, edge_vertices, edge_shift, cell_edges, cell_signs):
    evec = vertex_xy[edge_vertices[:, 1]] + edge_shift @ lattice.T - vertex_xy[edge_vertices[:, 0]]
    out = []
    for edges, signs in zip(cell_edges, cell_signs):
        e0, s0 = edges[0], signs[0]
        p = vertex_xy[edge_vertices[e0, 0] if s0 > 0 else edge_vertices[e0, 1]].copy()
        pts = []
        for e, s in zip(edges, signs):
            pts.append(p.copy())
            p = p + s * evec[e]
        out.append(np.mean(pts, axis=0))
    out = np.array(out)
    frac = np.linalg.solve(lattice, out.T).T
    frac -= np.floor(frac)
    return frac @ lattice.T


def build_periodic_quad(n: int, spacing: float = 1.0) -> MeshPair:
    """n x n periodic squares; the twisted grid is the same lattice offset by half a cell."""
    if int(n) != n or n < 2:
        raise InvalidMeshSize(f"quad mesh needs n >= 2, got {n}")
    if not spacing > 0:
        raise InvalidMeshSize(f"spacing must be positive, got {spacing}")
    n = int(n)

    def vid(i, j):
        return (i % n) + n * (j % n)

    def xedge(i, j):
        return 2 * vid(i, j)

    def yedge(i, j):
        return 2 * vid(i, j) + 1

    verts = np.array([(i * spacing, j * spacing) for j in range(n) for i in range(n)])
    edge_vertices = np.zeros((2 * n * n, 2), dtype=np.int64)
    edge_shift = np.zeros((2 * n * n, 2), dtype=np.int64)
    for j in range(n):
        for i in range(n):
            edge_vertices[xedge(i, j)] = (vid(i, j), vid(i + 1, j))
            edge_shift[xedge(i, j)] = ((i + 1) // n, 0)
            edge_vertices[yedge(i, j)] = (vid(i, j), vid(i, j + 1))
            edge_shift[yedge(i, j)] = (0, (j + 1) // n)
    cell_edges, cell_signs = [], []
    for j in range(n):
        for i in range(n):
            cell_edges.append([xedge(i, j), yedge(i + 1, j), xedge(i, j + 1), yedge(i, j)])
            cell_signs.append([1, 1, -1, -1])
    lattice = np.array([[n * spacing, 0.0], [0.0, n * spacing]])
    centers = _cell_centers(lattice, verts, edge_vertices, edge_shift, cell_edges, cell_signs)
    return assemble_mesh(n * n, edge_vertices, cell_edges, cell_signs, lattice, verts,
                         edge_shift, centers, kind="quad", n=n, spacing=spacing)


def build_periodic_trihex(n: int, spacing: float = 1.0) -> MeshPair:
    """Equilateral triangles on an n x n periodic rhombus; the twisted grid is hexagonal."""
    if int(n) != n or n < 2 or n % 2:
        raise InvalidMeshSize(f"trihex mesh needs an even n >= 2, got {n}")
    if not spacing > 0:
        raise InvalidMeshSize(f"spacing must be positive, got {spacing}")
    n = int(n)
    a1 = np.array([spacing, 0.0])
    a2 = np.array([0.5 * spacing, 0.5 * np.sqrt(3.0) * spacing])

    def vid(i, j):
        return (i % n) + n * (j % n)

    # three edges leave each vertex: along a1, a2 and a2 - a1
    def edge(i, j, d):
        return 3 * vid(i, j) + d

    verts = np.array([i * a1 + j * a2 for j in range(n) for i in range(n)])
    edge_vertices = np.zeros((3 * n * n, 2), dtype=np.int64)
    edge_shift = np.zeros((3 * n * n, 2), dtype=np.int64)
    steps = [(1, 0), (0, 1), (-1, 1)]
    for j in range(n):
        for i in range(n):
            for d, (di, dj) in enumerate(steps):
                edge_vertices[edge(i, j, d)] = (vid(i, j), vid(i + di, j + dj))
                edge_shift[edge(i, j, d)] = ((i + di) // n, (j + dj) // n)
    cell_edges, cell_signs = [], []
    for j in range(n):
        for i in range(n):
            # upward triangle (i,j) (i+1,j) (i,j+1)
            cell_edges.append([edge(i, j, 0), edge(i + 1, j, 2), edge(i, j, 1)])
            cell_signs.append([1, 1, -1])
            # downward triangle (i+1,j) (i+1,j+1) (i,j+1)
            cell_edges.append([edge(i + 1, j, 1), edge(i, j + 1, 0), edge(i + 1, j, 2)])
            cell_signs.append([1, -1, -1])
    lattice = np.column_stack([n * a1, n * a2])
    centers = _cell_centers(lattice, verts, edge_vertices, edge_shift, cell_edges, cell_signs)
    return assemble_mesh(n * n, edge_vertices, cell_edges, cell_signs, lattice, verts,
                         edge_shift, centers, kind="trihex", n=n, spacing=spacing)


def build_mesh(spec: str) -> MeshPair:
    """Build a generated mesh from ``kind:n[:spacing]``, e.g. ``quad:8`` or ``trihex:4:0.5``."""
    parts = spec.split(":")
    builders = {"quad": build_periodic_quad, "trihex": build_periodic_trihex}
    if parts[0] not in builders or not 2 <= len(parts) <= 3:
        raise ValueError(f"mesh spec must look like quad:N[:spacing] or trihex:N[:spacing], got {spec!r}")
    try:
        n = int(parts[1])
        spacing = float(parts[2]) if len(parts) == 3 else 1.0
    except ValueError:
        raise ValueError(f"bad numbers in mesh spec {spec!r}") from None
    return builders[parts[0]](n, spacing)
