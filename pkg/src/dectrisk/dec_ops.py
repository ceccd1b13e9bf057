"""Exterior derivatives, Voronoi Hodge stars, inner products and adjoints."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .cochain import Cochain, FormType, pairing_sign
from .errors import CochainTypeError, SingularHodge, UnsupportedHodge


@dataclass(frozen=True, eq=False)
class SparseLinearOp:
    """A sparse matrix with typed domain and codomain."""

    matrix: sp.csr_matrix
    domain: FormType
    codomain: FormType
    name: str = ""

    def __call__(self, c: Cochain) -> Cochain:
        if not isinstance(c, Cochain) or c.type != self.domain:
            got = c.type if isinstance(c, Cochain) else type(c).__name__
            raise CochainTypeError(f"{self.name or 'operator'} expects {self.domain}, got {got}")
        if len(c) != self.matrix.shape[1]:
            raise CochainTypeError(f"{self.name}: cochain has {len(c)} values, "
                                   f"expected {self.matrix.shape[1]}")
        d = self.codomain
        return Cochain(d.degree, d.grid, self.matrix @ c.values, d.flavor)

    @property
    def T(self):
        return transpose_op(self)

    def __matmul__(self, other):
        """Compose operators (``A @ B`` applies B first)."""
        if not isinstance(other, SparseLinearOp):
            return NotImplemented
        if other.codomain != self.domain:
            raise CochainTypeError(f"cannot compose {self.name} after {other.name}: "
                                   f"{other.codomain} != {self.domain}")
        return SparseLinearOp((self.matrix @ other.matrix).tocsr(), other.domain,
                              self.codomain, f"{self.name}{other.name}")

    def diagonal(self):
        return self.matrix.diagonal()

    def __repr__(self):
        return f"SparseLinearOp({self.name}: {self.domain} -> {self.codomain})"


def transpose_op(X: SparseLinearOp) -> SparseLinearOp:
    """Matrix transpose acting between the pairing duals of X's codomain and domain."""
    return SparseLinearOp(X.matrix.T.tocsr(), X.codomain.dual(), X.domain.dual(), f"({X.name})^T")


_D_TYPES = {
    (1, "straight"): (FormType(0, "straight"), FormType(1, "straight", "circulation"), "D1"),
    (2, "straight"): (FormType(1, "straight", "circulation"), FormType(2, "straight"), "D2"),
    (1, "twisted"): (FormType(0, "twisted"), FormType(1, "twisted", "circulation"), "Dbar1"),
    (2, "twisted"): (FormType(1, "twisted", "flux"), FormType(2, "twisted"), "Dbar2"),
}


def build_d(mesh, k: int, grid: str) -> SparseLinearOp:
    """Coboundary operator from (k-1)-cochains to k-cochains on ``grid``."""
    t = mesh.topology
    if (k, grid) not in _D_TYPES:
        raise ValueError(f"no exterior derivative D{k} on the {grid} grid")
    matrix = {
        (1, "straight"): t.edge_vertex_matrix,
        (2, "straight"): t.cell_edge_matrix,
        (1, "twisted"): t.tedge_tvertex_matrix,
        (2, "twisted"): t.tcell_tedge_matrix,
    }[(k, grid)]
    dom, cod, name = _D_TYPES[(k, grid)]
    return SparseLinearOp(matrix.tocsr(), dom, cod, name)


def check_transpose_duality(mesh):
    """Max deviation in Dbar2 = -D1^T and D2 = Dbar1^T."""
    D1, D2 = build_d(mesh, 1, "straight"), build_d(mesh, 2, "straight")
    Db1, Db2 = build_d(mesh, 1, "twisted"), build_d(mesh, 2, "twisted")

    def dev(a):
        return float(abs(a).max()) if a.nnz else 0.0

    return {
        "Dbar2 = -D1^T": dev(Db2.matrix + D1.matrix.T),
        "D2 = Dbar1^T": dev(D2.matrix - Db1.matrix.T),
    }


def _diag(values, dom, cod, name):
    return SparseLinearOp(sp.diags(np.asarray(values, float), format="csr"), dom, cod, name)


def build_hodge_voronoi(mesh):
    """Diagonal Hodge stars H1, Hbar2, H2 of an orthogonal (Voronoi) mesh pair."""
    if not mesh.orthogonal:
        raise UnsupportedHodge("the Voronoi Hodge star needs an orthogonal mesh pair")
    g = mesh.geometry
    return {
        "H1": _diag(g.tedge_length / g.edge_length, FormType(1, "straight", "circulation"),
                    FormType(1, "twisted", "flux"), "H1"),
        "Hbar2": _diag(1.0 / g.tcell_area, FormType(2, "twisted"), FormType(0, "straight"), "Hbar2"),
        "H2": _diag(1.0 / g.cell_area, FormType(2, "straight"), FormType(0, "twisted"), "H2"),
    }


def _inverse_diag(op, sign, name):
    d = op.diagonal()
    if np.any(d == 0) or not np.all(np.isfinite(d)):
        raise SingularHodge(f"{op.name} has a zero or non-finite diagonal entry")
    return _diag(sign / d, op.codomain, op.domain, name)


def derive_inverse_hodges(primary):
    """Hbar1 = -H1^-1, H0 = Hbar2^-1 and Hbar0 = H2^-1."""
    return {
        "Hbar1": _inverse_diag(primary["H1"], -1.0, "Hbar1"),
        "H0": _inverse_diag(primary["Hbar2"], 1.0, "H0"),
        "Hbar0": _inverse_diag(primary["H2"], 1.0, "Hbar0"),
    }


@lru_cache(maxsize=32)
def hodge_stars(mesh):
    """All six diagonal Hodge stars keyed by name."""
    h = build_hodge_voronoi(mesh)
    h.update(derive_inverse_hodges(h))
    return h


def _hodge_from(mesh, t: FormType):
    """The Hodge star whose domain is ``t``, up to flavor."""
    stars = hodge_stars(mesh)
    for op in stars.values():
        if op.domain.degree == t.degree and op.domain.grid == t.grid:
            return op
    raise UnsupportedHodge(f"no Hodge star acting on {t}")


def inner_product(mesh, a: Cochain, b: Cochain) -> float:
    """<a, b> = a^T H_k b on the straight grid, (-1)^(k(n-k)) a^T Hbar_k b on the twisted grid."""
    if a.type != b.type:
        raise CochainTypeError(f"inner product needs equal types, got {a.type} and {b.type}")
    H = _hodge_from(mesh, a.type)
    sign = pairing_sign(a.type)
    return sign * float(np.dot(a.values, H.matrix @ b.values))
