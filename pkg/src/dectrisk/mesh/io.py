"""Plain-text mesh files.

Layout (``#`` starts a comment, blank lines are ignored)::

    DECMESH 1
    KIND quad 3 1.0                 # or: KIND custom
    LATTICE ax ay bx by
    VERTICES <V>                    # id x y
    EDGES <E>                       # id tail head shift_a shift_b
    CELLS <C>                       # id k e1 s1 ... ek sk   (CCW loop, s = n_ec)
    TWISTED_VERTICES <C>            # id x y
    TWISTED_EDGES <E>               # id tail head
    TWISTED_CELLS <V>               # id k e1 s1 ... ek sk
    DUALITY <V+E+C>                 # vertex|edge|cell straight_id twisted_id
    GEOMETRY                        # optional, overrides recomputed sizes
    EDGE_LENGTH <E> / TWISTED_EDGE_LENGTH <E> / CELL_AREA <C> /
    TWISTED_CELL_AREA <V> / EXTENDED_EDGE_AREA <E>      # id value
    CELL_OVERLAP <nnz> / EXTENDED_EDGE_OVERLAP <nnz>    # twisted_cell other value
    END

Twisted sections are written with their own ids and mapped through DUALITY on
load; they must agree with the orientation induced from the straight grid.
"""
from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..errors import MeshParseError, MeshValidationError
from .pair import MeshPair, assemble_mesh
from .validate import validate_mesh

REQUIRED = ["LATTICE", "VERTICES", "EDGES", "CELLS", "TWISTED_VERTICES",
            "TWISTED_EDGES", "TWISTED_CELLS", "DUALITY"]
SIZE_SECTIONS = {
    "EDGE_LENGTH": "edge_length",
    "TWISTED_EDGE_LENGTH": "tedge_length",
    "CELL_AREA": "cell_area",
    "TWISTED_CELL_AREA": "tcell_area",
    "EXTENDED_EDGE_AREA": "kite_area",
}
OVERLAP_SECTIONS = {"CELL_OVERLAP": "cell_overlap", "EXTENDED_EDGE_OVERLAP": "kite_overlap"}


def _f(x):
    return format(float(x), ".17g")


def _loop(edges, signs):
    return " ".join(f"{int(e)} {int(s)}" for e, s in zip(edges, signs))


def save_mesh(mesh: MeshPair, destination, geometry=True):
    t, g = mesh.topology, mesh.geometry
    out = ["DECMESH 1"]
    if mesh.kind == "custom":
        out.append("KIND custom")
    else:
        out.append(f"KIND {mesh.kind} {mesh.n} {_f(mesh.spacing)}")
    out.append("LATTICE " + " ".join(_f(x) for x in g.lattice.T.ravel()))
    out.append(f"VERTICES {t.n_vertices}")
    out += [f"{i} {_f(x)} {_f(y)}" for i, (x, y) in enumerate(g.vertex_xy)]
    out.append(f"EDGES {t.n_edges}")
    out += [f"{i} {a} {b} {s0} {s1}"
            for i, ((a, b), (s0, s1)) in enumerate(zip(t.edge_vertices, g.edge_shift))]
    out.append(f"CELLS {t.n_cells}")
    out += [f"{i} {len(e)} {_loop(e, s)}" for i, (e, s) in enumerate(zip(t.cell_edges, t.cell_signs))]
    out.append(f"TWISTED_VERTICES {t.n_cells}")
    out += [f"{i} {_f(x)} {_f(y)}" for i, (x, y) in enumerate(g.tvertex_xy)]
    out.append(f"TWISTED_EDGES {t.n_edges}")
    out += [f"{i} {a} {b}" for i, (a, b) in enumerate(t.tedge_vertices)]
    out.append(f"TWISTED_CELLS {t.n_vertices}")
    out += [f"{i} {len(e)} {_loop(e, s)}" for i, (e, s) in enumerate(zip(t.tcell_edges, t.tcell_signs))]
    out.append(f"DUALITY {t.n_vertices + t.n_edges + t.n_cells}")
    for name, arr in [("vertex", t.dual_of_vertex), ("edge", t.dual_of_edge), ("cell", t.dual_of_cell)]:
        out += [f"{name} {i} {j}" for i, j in enumerate(arr)]
    if geometry:
        out.append("GEOMETRY")
        for section, attr in SIZE_SECTIONS.items():
            vals = getattr(g, attr)
            out.append(f"{section} {len(vals)}")
            out += [f"{i} {_f(x)}" for i, x in enumerate(vals)]
        for section, attr in OVERLAP_SECTIONS.items():
            m = getattr(g, attr).tocoo()
            out.append(f"{section} {m.nnz}")
            out += [f"{r} {c} {_f(x)}" for r, c, x in zip(m.row, m.col, m.data)]
    out.append("END")
    path = Path(destination)
    try:
        path.write_text("\n".join(out) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write mesh file {path}: {exc}") from exc


class _Lines:
    def __init__(self, text):
        self.items = []
        for no, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                self.items.append((no, line.split()))
        self.pos = 0

    def peek(self):
        return self.items[self.pos] if self.pos < len(self.items) else (None, None)

    def next(self, expecting):
        if self.pos >= len(self.items):
            raise MeshParseError(f"unexpected end of file, missing section {expecting}")
        item = self.items[self.pos]
        self.pos += 1
        return item


def _num(tok, kind, line):
    try:
        return kind(tok)
    except ValueError:
        raise MeshParseError(f"expected {kind.__name__}, got {tok!r}", line) from None


def _header(lines, name):
    no, toks = lines.next(name)
    if toks[0] != name:
        raise MeshParseError(f"expected section {name}, found {toks[0]}", no)
    if len(toks) != 2:
        raise MeshParseError(f"section {name} needs a count", no)
    count = _num(toks[1], int, no)
    if count < 0:
        raise MeshParseError(f"negative count in section {name}", no)
    return count


def _rows(lines, name, count, parse):
    """Read ``count`` rows keyed by a unique id in 0..count-1."""
    seen = {}
    for _ in range(count):
        no, toks = lines.next(name)
        if toks[0].isalpha() and toks[0].isupper():
            raise MeshParseError(f"section {name} ended early: missing rows "
                                 f"{sorted(set(range(count)) - set(seen))[:5]}...", no)
        key = _num(toks[0], int, no)
        if key in seen:
            raise MeshParseError(f"duplicate id {key} in section {name}", no)
        if not 0 <= key < count:
            raise MeshParseError(f"id {key} out of range 0..{count - 1} in section {name}", no)
        seen[key] = parse(toks[1:], no)
    return [seen[i] for i in range(count)]


def _xy(toks, no):
    if len(toks) != 2:
        raise MeshParseError("expected 2 coordinates", no)
    return (_num(toks[0], float, no), _num(toks[1], float, no))


def _loop_row(toks, no):
    k = _num(toks[0], int, no) if toks else -1
    if k < 1 or len(toks) != 1 + 2 * k:
        raise MeshParseError("cell row must be: k e1 s1 ... ek sk", no)
    vals = [_num(x, int, no) for x in toks[1:]]
    return vals[0::2], vals[1::2]


def _int_row(width):
    def parse(toks, no):
        if len(toks) != width:
            raise MeshParseError(f"expected {width} integers", no)
        return [_num(x, int, no) for x in toks]
    return parse


def load_mesh(source) -> MeshPair:
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read mesh file {path}: {exc}") from exc
    return parse_mesh(text)


def parse_mesh(text) -> MeshPair:
    lines = _Lines(text)
    present = {toks[0] for _, toks in lines.items}
    missing = [s for s in REQUIRED + ["END"] if s not in present]
    if missing:
        raise MeshParseError(f"missing section {missing[0]} (file truncated?)",
                             lines.items[-1][0] if lines.items else None)
    no, toks = lines.next("DECMESH")
    if toks != ["DECMESH", "1"]:
        raise MeshParseError("not a mesh file (expected 'DECMESH 1')", no)
    kind, n, spacing = "custom", 0, 0.0
    no, toks = lines.peek()
    if toks and toks[0] == "KIND":
        lines.next("KIND")
        if toks[1:2] != ["custom"]:
            if len(toks) != 4:
                raise MeshParseError("KIND needs: name n spacing", no)
            kind, n, spacing = toks[1], _num(toks[2], int, no), _num(toks[3], float, no)
    no, toks = lines.next("LATTICE")
    if toks[0] != "LATTICE" or len(toks) != 5:
        raise MeshParseError("expected LATTICE ax ay bx by", no)
    lat = np.array([_num(x, float, no) for x in toks[1:]]).reshape(2, 2).T

    nv = _header(lines, "VERTICES")
    verts = np.array(_rows(lines, "VERTICES", nv, _xy)).reshape(-1, 2)
    ne = _header(lines, "EDGES")
    erows = np.array(_rows(lines, "EDGES", ne, _int_row(4)), dtype=np.int64).reshape(-1, 4)
    nc = _header(lines, "CELLS")
    cells = _rows(lines, "CELLS", nc, _loop_row)
    ntv = _header(lines, "TWISTED_VERTICES")
    tverts = np.array(_rows(lines, "TWISTED_VERTICES", ntv, _xy)).reshape(-1, 2)
    nte = _header(lines, "TWISTED_EDGES")
    tedges = np.array(_rows(lines, "TWISTED_EDGES", nte, _int_row(2)), dtype=np.int64).reshape(-1, 2)
    ntc = _header(lines, "TWISTED_CELLS")
    tcells = _rows(lines, "TWISTED_CELLS", ntc, _loop_row)
    if (ntv, nte, ntc) != (nc, ne, nv):
        raise MeshParseError("twisted element counts do not match the straight grid's duals")

    ndual = _header(lines, "DUALITY")
    maps = {"vertex": {}, "edge": {}, "cell": {}}
    for _ in range(ndual):
        no, toks = lines.next("DUALITY")
        if len(toks) != 3 or toks[0] not in maps:
            raise MeshParseError("duality row must be: vertex|edge|cell straight twisted", no)
        a, b = _num(toks[1], int, no), _num(toks[2], int, no)
        if a in maps[toks[0]]:
            raise MeshParseError(f"duplicate duality entry for {toks[0]} {a}", no)
        maps[toks[0]][a] = b
    dual = {}
    for name, size in [("vertex", nv), ("edge", ne), ("cell", nc)]:
        m = maps[name]
        arr = np.array([m.get(i, -1) for i in range(size)], dtype=np.int64)
        if not np.array_equal(np.sort(arr), np.arange(size)):
            raise MeshParseError(f"duality map for {name}s is not a bijection")
        dual[name] = arr

    overrides = {}
    no, toks = lines.peek()
    if toks and toks[0] == "GEOMETRY":
        lines.next("GEOMETRY")
        while True:
            no, toks = lines.peek()
            if toks is None or toks[0] == "END":
                break
            name = toks[0]
            if name in SIZE_SECTIONS:
                count = _header(lines, name)
                overrides[SIZE_SECTIONS[name]] = np.array(
                    _rows(lines, name, count, lambda t, n_: _num(t[0], float, n_)))
            elif name in OVERLAP_SECTIONS:
                count = _header(lines, name)
                data = []
                for _ in range(count):
                    no, t = lines.next(name)
                    if len(t) != 3:
                        raise MeshParseError("overlap row must be: twisted_cell other value", no)
                    data.append((_num(t[0], int, no), _num(t[1], int, no), _num(t[2], float, no)))
                overrides[OVERLAP_SECTIONS[name]] = data
            else:
                raise MeshParseError(f"unknown geometry section {name}", no)
    no, toks = lines.next("END")
    if toks != ["END"]:
        raise MeshParseError(f"expected END, found {toks[0]}", no)

    # twisted vertices are stored under their own ids; bring them to straight-cell order
    tvert_canon = tverts[dual["cell"]]
    mesh = assemble_mesh(nv, erows[:, :2], [c[0] for c in cells], [c[1] for c in cells],
                         lat, verts, erows[:, 2:], tvert_canon, kind=kind, n=n, spacing=spacing)
    t = mesh.topology

    fails = []
    inv_edge = np.argsort(dual["edge"])
    # file twisted edge dual["edge"][e] should join file twisted vertices of induced tail/head
    expect = dual["cell"][t.tedge_vertices]
    if not np.array_equal(tedges[dual["edge"]], expect):
        fails.append("twisted-orientation: TWISTED_EDGES disagree with induced orientation")
    for v in range(nv):
        edges, signs = tcells[dual["vertex"][v]]
        got = {(int(inv_edge[e]), s) for e, s in zip(edges, signs)}
        want = {(int(e), int(s)) for e, s in zip(t.tcell_edges[v], t.tcell_signs[v])}
        if got != want:
            fails.append("twisted-orientation: TWISTED_CELLS disagree with induced orientation")
            break
    if fails:
        raise MeshValidationError(fails)

    if overrides:
        g = mesh.geometry
        changes = {}
        for attr, vals in overrides.items():
            if attr in OVERLAP_SECTIONS.values():
                shape = getattr(g, attr).shape
                r, c, x = zip(*vals) if vals else ((), (), ())
                changes[attr] = sp.csr_matrix((x, (r, c)), shape=shape)
            else:
                if len(vals) != len(getattr(g, attr)):
                    raise MeshParseError(f"geometry section for {attr} has wrong length")
                vals.setflags(write=False)
                changes[attr] = vals
        mesh = dataclasses.replace(mesh, geometry=dataclasses.replace(g, **changes))

    fails = validate_mesh(mesh)
    if fails:
        raise MeshValidationError(fails)
    return mesh
