"""Discrete wedge products: PV averaging R, the TRSK operator W, Q variants and the KE wedge T.

All wedges are sparse 3-tensors ``out[t] = sum coef * a[ia] * b[ib]``.
Index conventions follow :mod:`dectrisk.mesh.topology`: twisted vertices
are numbered like straight cells, twisted edges like straight edges and
twisted cells like straight vertices.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .cochain import Cochain, FormType
from .dec_ops import SparseLinearOp, build_d
from .errors import CochainTypeError, ConstructionFailure, MissingGeometry, UnsupportedVariant

IDENTITY_TOL = 1e-13

TWISTED_FLUX = FormType(1, "twisted", "flux")
STRAIGHT_CIRC = FormType(1, "straight", "circulation")
STRAIGHT0 = FormType(0, "straight")
TWISTED0 = FormType(0, "twisted")
STRAIGHT2 = FormType(2, "straight")
TWISTED2 = FormType(2, "twisted")

Q_VARIANTS = ("TE", "PE", "DBL", "ACCUR")


@dataclass(frozen=True, eq=False)
class WedgeTensor:
    """Sparse bilinear map with typed inputs and output."""

    target: np.ndarray
    index_a: np.ndarray
    index_b: np.ndarray
    coef: np.ndarray
    n_out: int
    type_a: FormType
    type_b: FormType
    type_out: FormType
    name: str = ""

    @classmethod
    def from_entries(cls, entries, n_out, type_a, type_b, type_out, name=""):
        arr = np.array(entries, dtype=float).reshape(-1, 4)
        return cls(arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64),
                   arr[:, 2].astype(np.int64), arr[:, 3], n_out, type_a, type_b, type_out, name)

    def apply_values(self, a, b):
        w = self.coef * np.asarray(a)[self.index_a] * np.asarray(b)[self.index_b]
        return np.bincount(self.target, weights=w, minlength=self.n_out)

    def __call__(self, a: Cochain, b: Cochain) -> Cochain:
        for c, want, label in [(a, self.type_a, "first"), (b, self.type_b, "second")]:
            if not isinstance(c, Cochain) or c.type != want:
                got = c.type if isinstance(c, Cochain) else type(c).__name__
                raise CochainTypeError(f"{self.name}: {label} argument must be {want}, got {got}")
        o = self.type_out
        return Cochain(o.degree, o.grid, self.apply_values(a.values, b.values), o.flavor)

    def matrix(self, a_values, n_b=None):
        """The linear map b -> self(a, b) for fixed first argument values."""
        w = self.coef * np.asarray(a_values)[self.index_a]
        if n_b is None:
            n_b = int(self.index_b.max()) + 1 if len(self.index_b) else 0
        return sp.csr_matrix((w, (self.target, self.index_b)), shape=(self.n_out, n_b))

    def transpose_indices(self, order, n_out, type_a, type_b, type_out, name=""):
        """Re-label the three index slots; ``order`` names the slots that become (target, a, b)."""
        slots = {"t": self.target, "a": self.index_a, "b": self.index_b}
        t, a, b = (slots[k] for k in order)
        return WedgeTensor(t, a, b, self.coef, n_out, type_a, type_b, type_out, name)


# --- R --------------------------------------------------------------------

def _r_tensor(mesh, R):
    """Single-q PV wedge: (q ^ h)_c = q_c * sum_v R[c, v] h_v."""
    coo = R.tocoo()
    return WedgeTensor(coo.row.astype(np.int64), coo.row.astype(np.int64), coo.col.astype(np.int64),
                       coo.data, mesh.topology.n_cells, TWISTED0, TWISTED2, STRAIGHT2, "R")


@dataclass(frozen=True, eq=False)
class PVAveraging:
    """R as a matrix (twisted 2 -> straight 2) and as the single-q wedge."""

    kind: str
    matrix: sp.csr_matrix  # (C, V): R[c, v] = R_{c~,c}
    wedge: WedgeTensor

    @property
    def op(self):
        return SparseLinearOp(self.matrix, TWISTED2, STRAIGHT2, "R")


def build_R_metric(mesh) -> PVAveraging:
    g = mesh.geometry
    if g.cell_overlap is None:
        raise MissingGeometry("metric R needs straight/twisted cell overlap areas")
    R = sp.diags(1.0 / g.tcell_area) @ g.cell_overlap  # (V, C)
    R = R.T.tocsr()
    return PVAveraging("metric", R, _r_tensor(mesh, R))


def build_R_combinatorial(mesh) -> PVAveraging:
    t = mesh.topology
    rows, cols, vals = [], [], []
    for v, cells in enumerate(t.tcell_cells):
        for c in cells:
            rows.append(int(c))
            cols.append(v)
            vals.append(1.0 / len(cells))
    R = sp.csr_matrix((vals, (rows, cols)), shape=(t.n_cells, t.n_vertices))
    return PVAveraging("combinatorial", R, _r_tensor(mesh, R))


def build_R(mesh, kind):
    if kind == "metric":
        return build_R_metric(mesh)
    if kind == "combinatorial":
        return build_R_combinatorial(mesh)
    raise ValueError(f"unknown R kind {kind!r}")


def apply_R_weighted(R: PVAveraging, q: Cochain, h: Cochain) -> Cochain:
    """Wedge(q~0, h~2): straight 2-form with (out)_c = q_c (R h)_c."""
    return R.wedge(q, h)


def apply_R_adjoint(R: PVAveraging, x: Cochain, y: Cochain) -> Cochain:
    """Adjoint of the PV wedge in its second slot: (out)_v = sum_c R[c, v] x_c y_c."""
    for c in (x, y):
        if c.type != TWISTED0:
            raise CochainTypeError(f"R adjoint needs twisted 0-forms, got {c.type}")
    return Cochain(0, "straight", R.matrix.T @ (x.values * y.values))


# --- W ----------------------------------------------------------------------

def build_W_from_R(mesh, R: PVAveraging, check=True) -> SparseLinearOp:
    """TRSK flux-to-circulation operator built twisted cell by twisted cell.

    Around straight vertex v take the CCW edge loop e_0..e_{m-1} and the
    cells c_k between e_k and e_{k+1}, with R_k = R[c_k, v].  Edge e_i
    contributes to e_j with ``t_ve_j t_ve_i (1/2 - sum_{k in [i, j)} R_k)``
    (indices cyclic); the coefficients are antisymmetric because the R_k
    around v sum to 1.  Correctness is defined by the identities checked in
    :func:`w_identity_residuals`.
    """
    t = mesh.topology
    Rm = R.matrix.tocsc()
    rows, cols, vals = [], [], []
    for v in range(t.n_vertices):
        edges = t.tcell_edges[v]
        cells = t.tcell_cells[v]
        m = len(edges)
        r = np.array([Rm[int(c), v] for c in cells])
        t_ve = np.where(t.edge_vertices[edges, 1] == v, 1.0, -1.0)
        # prefix[k] = r_0 + ... + r_{k-1}; cyclic range sums follow from it
        prefix = np.concatenate([[0.0], np.cumsum(r)])
        for i in range(m):
            for j in range(m):
                if i == j:
                    continue
                forward = prefix[j] - prefix[i] if j > i else prefix[m] - prefix[i] + prefix[j]
                backward = prefix[i] - prefix[j] if i > j else prefix[m] - prefix[j] + prefix[i]
                rows.append(edges[j])
                cols.append(edges[i])
                # (backward - forward)/2 equals 1/2 - forward when the r's sum to one,
                # and is exactly antisymmetric in floating point
                vals.append(t_ve[j] * t_ve[i] * 0.5 * (backward - forward))
    W = sp.csr_matrix((vals, (rows, cols)), shape=(t.n_edges, t.n_edges))
    W.eliminate_zeros()
    op = SparseLinearOp(W, TWISTED_FLUX, STRAIGHT_CIRC, "W")
    if check:
        res = w_identity_residuals(mesh, R, op)
        bad = {k: v for k, v in res.items() if v > IDENTITY_TOL}
        if bad:
            raise ConstructionFailure(f"W violates {bad}")
    return op


def _max_abs(m):
    m = sp.csr_matrix(m)
    return float(abs(m).max()) if m.nnz else 0.0


def w_identity_residuals(mesh, R: PVAveraging, W: SparseLinearOp):
    D2 = build_d(mesh, 2, "straight").matrix
    Db2 = build_d(mesh, 2, "twisted").matrix
    D1 = build_d(mesh, 1, "straight").matrix
    Db1 = build_d(mesh, 1, "twisted").matrix
    return {
        "W + W^T": _max_abs(W.matrix + W.matrix.T),
        "R Dbar2 - D2 W": _max_abs(R.matrix @ Db2 - D2 @ W.matrix),
        "W Dbar1 - D1 R^T": _max_abs(W.matrix @ Db1 - D1 @ R.matrix.T),
    }


# --- Q ----------------------------------------------------------------------

def _q_tensor(mesh, entries, name):
    return WedgeTensor.from_entries(entries, mesh.topology.n_edges, TWISTED0, TWISTED_FLUX,
                                    STRAIGHT_CIRC, name)


def build_Q(variant, mesh, R: PVAveraging, W: SparseLinearOp) -> WedgeTensor:
    """PV flux operator Q(q~0, x~ flux) -> straight circulation.

    TE: (q_e W + W q_e)/2, PE: W q_e, ACCUR: q_e W, where q_e averages q over
    the two cells sharing an edge; DBL: see :func:`build_Q_dbl`.
    """
    if variant == "DBL":
        return build_Q_dbl(mesh, R, W)
    if variant not in Q_VARIANTS:
        raise UnsupportedVariant(f"unknown Q variant {variant!r}")
    t = mesh.topology
    coo = W.matrix.tocoo()
    entries = []
    for e, e2, w in zip(coo.row, coo.col, coo.data):
        if variant in ("TE", "ACCUR"):
            share = 0.25 if variant == "TE" else 0.5
            for c in t.tedge_vertices[e]:
                entries.append((e, c, e2, share * w))
        if variant in ("TE", "PE"):
            share = 0.25 if variant == "TE" else 0.5
            for c in t.tedge_vertices[e2]:
                entries.append((e, c, e2, share * w))
    return _q_tensor(mesh, entries, f"Q^{variant}")


def build_Q_dbl(mesh, R, W):
    from .dbl import dbl_tensor
    return dbl_tensor(mesh, R, W)


def enstrophy_rule_residual(mesh, pv: "PVOperators", q) -> float:
    """max |Q(q, Dbar1 q) - D1 R^T(q^2) / 2| for twisted 0-form values ``q``."""
    Db1 = build_d(mesh, 1, "twisted").matrix
    D1 = build_d(mesh, 1, "straight").matrix
    q = np.asarray(q, dtype=float)
    lhs = pv.Q.apply_values(q, Db1 @ q)
    return float(np.max(np.abs(lhs - 0.5 * (D1 @ (pv.R.matrix.T @ q ** 2)))))


def full_leibniz_residual(mesh, pv: "PVOperators", x, y) -> float:
    """max |Q(x, Dbar1 y) + Q(y, Dbar1 x) - D1 R^T(x y)|."""
    Db1 = build_d(mesh, 1, "twisted").matrix
    D1 = build_d(mesh, 1, "straight").matrix
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lhs = pv.Q.apply_values(x, Db1 @ y) + pv.Q.apply_values(y, Db1 @ x)
    return float(np.max(np.abs(lhs - D1 @ (pv.R.matrix.T @ (x * y)))))


def pairing_antisymmetry_residual(Q: WedgeTensor, q) -> float:
    """max |M + M^T| for the edge-to-edge matrix M = Q(q, .)."""
    M = Q.matrix(q, Q.n_out)
    return _max_abs(M + M.T)


# --- T ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KEWedge:
    kind: str
    tensor: WedgeTensor  # (v, e, e~)
    matrix: sp.csr_matrix  # (V, E) coefficients T[v, e]


def build_T(kind, mesh) -> KEWedge:
    t, g = mesh.topology, mesh.geometry
    ev = t.edge_vertices
    if kind == "metric":
        if g.kite_overlap is None or g.kite_area is None:
            raise MissingGeometry("metric KE wedge needs extended edge areas")
        ko = g.kite_overlap.tocsc()
        coef = np.array([[ko[ev[e, s], e] for s in (0, 1)] for e in range(t.n_edges)])
        coef = coef / g.kite_area[:, None]
    elif kind == "combinatorial":
        coef = np.full((t.n_edges, 2), 0.5)
    else:
        raise ValueError(f"unknown T kind {kind!r}")
    e = np.repeat(np.arange(t.n_edges), 2)
    v = ev.ravel()
    c = coef.ravel()
    tensor = WedgeTensor(v, e, e, c, t.n_vertices, STRAIGHT_CIRC, TWISTED_FLUX, TWISTED2, f"T^{kind}")
    matrix = sp.csr_matrix((c, (v, e)), shape=(t.n_vertices, t.n_edges))
    return KEWedge(kind, tensor, matrix)


def ke_wedge(T: KEWedge, u: Cochain, ut: Cochain) -> Cochain:
    """(out)_v = sum_e T[v, e] u_e ut_e over the edges of twisted cell v."""
    return T.tensor(u, ut)


def massflux_adjoint(T: KEWedge, h: Cochain, x: Cochain) -> Cochain:
    """(out)_e = (sum_v T[v, e] h_v) x_e, on the grid and flavor of ``x``."""
    if h.type != STRAIGHT0:
        raise CochainTypeError(f"mass-flux wedge needs a straight 0-form height, got {h.type}")
    if x.type not in (STRAIGHT_CIRC, TWISTED_FLUX):
        raise CochainTypeError(f"mass-flux wedge needs a straight circulation or twisted flux, got {x.type}")
    return x.with_values((T.matrix.T @ h.values) * x.values)


# --- bundle -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PVOperators:
    R: PVAveraging
    W: SparseLinearOp
    variant: str
    Q: WedgeTensor


@lru_cache(maxsize=64)
def build_pv_operators(mesh, r_kind, variant):
    R = build_R(mesh, r_kind)
    W = build_W_from_R(mesh, R)
    return PVOperators(R, W, variant, build_Q(variant, mesh, R, W))
