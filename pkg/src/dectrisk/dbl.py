"""The doubly conservative PV flux tensor on uniform periodic quads.

The coefficients Q[e, c, e'] are found by a linear constraint solve:

* antisymmetry in the two edge slots, Q[e, c, e'] = -Q[e', c, e];
* consistency with W, sum_c Q[e, c, e'] = W[e, e'];
* the enstrophy Leibniz rule Q(q, Dbar1 q) = D1 R^T(q^2) / 2 for every q,
  matched coefficient by coefficient as a quadratic polynomial in q.

For each pair (e, e') sharing a straight vertex v the unknowns live on the
twisted vertices of the twisted cell around v.  The minimum-norm solution is
unique, hence invariant under lattice translations; it is computed once on a
reference torus and tiled onto quad meshes of any size.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .dec_ops import build_d
from .errors import ConstructionFailure, UnsupportedVariant
from .wedge import IDENTITY_TOL, STRAIGHT_CIRC, TWISTED0, TWISTED_FLUX, WedgeTensor

REFERENCE_N = 5
SOLVE_TOL = 1e-12


def _unknowns(t):
    """Index every (e, c, e') admitted by the per-vertex stencil."""
    index = {}
    for e in range(t.n_edges):
        for e2 in set(t.tECP(e)) - {e}:
            shared = set(t.VE(e)) & set(t.VE(e2))
            for c in sorted({c for v in shared for c in t.CV(v)}):
                index.setdefault((e, c, e2), len(index))
    return index


def constraint_system(mesh, R, W):
    """Sparse matrix and right-hand side of the three constraint families."""
    t = mesh.topology
    index = _unknowns(t)
    W = W.matrix.tocsr()
    D1 = build_d(mesh, 1, "straight").matrix.tocsr()
    Db1 = build_d(mesh, 1, "twisted").matrix.tocsr()
    Rc = R.matrix.tocsc()
    rows, cols, vals, rhs = [], [], [], []

    def equation(terms, value):
        r = len(rhs)
        for k, a in terms.items():
            rows.append(r)
            cols.append(k)
            vals.append(a)
        rhs.append(value)

    pairs = {}
    for (e, c, e2), k in index.items():
        pairs.setdefault((e, e2), []).append(k)
        mirror = index.get((e2, c, e))
        if mirror is None:
            equation({k: 1.0}, 0.0)
        elif e < e2:
            equation({k: 1.0, mirror: 1.0}, 0.0)
    for (e, e2), ks in pairs.items():
        equation({k: 1.0 for k in ks}, W[e, e2])

    by_edge = {}
    for (e, c, e2), k in index.items():
        by_edge.setdefault(e, []).append((c, e2, k))
    for e in range(t.n_edges):
        # coefficient of q_a q_b (a <= b) on each side of the enstrophy rule
        lhs = {}
        for c, e2, k in by_edge.get(e, []):
            row = Db1[e2]
            for c2, d in zip(row.indices, row.data):
                key = (min(c, c2), max(c, c2))
                lhs.setdefault(key, {})
                lhs[key][k] = lhs[key].get(k, 0.0) + d
        target = {}
        row = D1[e]
        for v, d in zip(row.indices, row.data):
            col = Rc[:, v]
            for c, r in zip(col.indices, col.data):
                target[(c, c)] = target.get((c, c), 0.0) + 0.5 * d * r
        for key in set(lhs) | set(target):
            equation(lhs.get(key, {}), target.get(key, 0.0))

    A = sp.csr_matrix((vals, (rows, cols)), shape=(len(rhs), len(index)))
    return index, A, np.array(rhs)


def _quad_ij(v, n):
    return v % n, v // n


def _wrap_offset(d, n):
    d = d % n
    return d - n if d > n // 2 else d


@lru_cache(maxsize=1)
def _reference_templates():
    """Per edge direction: list of (di, dj, dir', dci, dcj, coef) relative to the edge's tail."""
    from .mesh.pair import build_periodic_quad
    from .wedge import build_R_combinatorial, build_W_from_R

    n = REFERENCE_N
    mesh = build_periodic_quad(n)
    R = build_R_combinatorial(mesh)
    W = build_W_from_R(mesh, R)
    index, A, b = constraint_system(mesh, R, W)
    x = np.linalg.lstsq(A.toarray(), b, rcond=None)[0]
    resid = float(np.abs(A @ x - b).max())
    if resid > SOLVE_TOL:
        raise ConstructionFailure(f"DBL constraint system has no solution (residual {resid:.3g})")
    templates = {0: [], 1: []}
    for (e, c, e2), k in index.items():
        vid, direction = divmod(e, 2)
        if vid != 0 or abs(x[k]) < 1e-15:
            continue
        i2, j2 = _quad_ij(e2 // 2, n)
        ci, cj = _quad_ij(c, n)
        templates[direction].append((_wrap_offset(i2, n), _wrap_offset(j2, n), e2 % 2,
                                     _wrap_offset(ci, n), _wrap_offset(cj, n), float(x[k])))
    return templates


def dbl_supported(mesh, R) -> bool:
    """DBL is available on generated quad meshes whose R weights are all 1/4."""
    if mesh.kind != "quad":
        return False
    d = R.matrix.data
    return bool(d.size and np.allclose(d, 0.25, rtol=0, atol=1e-14))


def dbl_tensor(mesh, R, W, check=True) -> WedgeTensor:
    if not dbl_supported(mesh, R):
        raise UnsupportedVariant("the DBL PV flux is only available on uniform quad meshes "
                                 f"with quarter-cell PV averaging, not {mesh.label}")
    n = mesh.n
    target, qa, xb, coef = [], [], [], []
    for direction, entries in _reference_templates().items():
        for di, dj, d2, dci, dcj, a in entries:
            for j in range(n):
                for i in range(n):
                    target.append(2 * ((i % n) + n * (j % n)) + direction)
                    xb.append(2 * (((i + di) % n) + n * ((j + dj) % n)) + d2)
                    qa.append(((i + dci) % n) + n * ((j + dcj) % n))
                    coef.append(a)
    Q = WedgeTensor(np.array(target, dtype=np.int64), np.array(qa, dtype=np.int64),
                    np.array(xb, dtype=np.int64), np.array(coef), mesh.topology.n_edges,
                    TWISTED0, TWISTED_FLUX, STRAIGHT_CIRC, "Q^DBL")
    if check:
        res = dbl_residuals(mesh, R, W, Q)
        bad = {k: v for k, v in res.items() if v > IDENTITY_TOL}
        if bad:
            raise ConstructionFailure(f"DBL tensor violates {bad}")
    return Q


def _max_abs(m):
    m = sp.csr_matrix(m)
    m.eliminate_zeros()
    return float(abs(m).max()) if m.nnz else 0.0


def dbl_residuals(mesh, R, W, Q):
    """Coefficient-level residuals of the three defining constraints."""
    t = mesh.topology
    E, C = t.n_edges, t.n_cells
    # rows (e, c), columns e'; duplicates are summed
    full = sp.csr_matrix((Q.coef, (Q.target * C + Q.index_a, Q.index_b)), shape=(E * C, E))
    mirror = sp.csr_matrix((Q.coef, (Q.index_b * C + Q.index_a, Q.target)), shape=(E * C, E))
    summed = sp.csr_matrix((Q.coef, (Q.target, Q.index_b)), shape=(E, E))
    D1 = build_d(mesh, 1, "straight").matrix
    Db1 = build_d(mesh, 1, "twisted").matrix
    # enstrophy rule as a quadratic form in q: M[(e, c), c'] = sum_f Q[e, c, f] Dbar1[f, c']
    M = (full @ Db1).tocoo()
    e, c = divmod(M.row, C)
    swapped = sp.csr_matrix((M.data, (e * C + M.col, c)), shape=(E * C, C))
    lhs = 0.5 * (M.tocsr() + swapped)
    target = (0.5 * D1 @ R.matrix.T).tocoo()  # (E, C) diagonal terms q_c^2
    rhs = sp.csr_matrix((target.data, (target.row * C + target.col, target.col)), shape=(E * C, C))
    return {
        "Q antisymmetry": _max_abs(full + mirror),
        "Q(1) - W": _max_abs(summed - W.matrix),
        "enstrophy rule": _max_abs(lhs - rhs),
    }
