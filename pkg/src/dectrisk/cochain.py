"""Discrete forms (cochains), reduction of analytic fields, and the topological pairing.

A cochain is a value per oriented k-cell of the straight or twisted grid.
Edge cochains additionally carry a *flavor*: ``circulation`` values are
tangential line integrals (1-forms), ``flux`` values are normal line
integrals ((n-1)-forms).  On each grid the unit vectors are

=========  ==========================  ==================================
grid       circulation direction       flux direction
=========  ==========================  ==================================
straight   edge tangent t              t turned clockwise
twisted    twisted tangent s = k x t   s turned clockwise (= t if orthogonal)
=========  ==========================  ==================================
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import PairingTypeError, UnsupportedScaling, WrongDegree
from .quadrature import cell_rule, line_points

GRIDS = ("straight", "twisted")
FLAVORS = ("circulation", "flux")
DIM = 2


class FormType(NamedTuple):
    degree: int
    grid: str
    flavor: Optional[str] = None

    def __str__(self):
        extra = f" ({self.flavor})" if self.flavor else ""
        return f"{self.grid} {self.degree}-form{extra}"

    def dual(self):
        """Type of the cochains that pair with this one."""
        other = "twisted" if self.grid == "straight" else "straight"
        flavor = None
        if self.degree == 1:
            flavor = "flux" if self.flavor == "circulation" else "circulation"
        return FormType(DIM - self.degree, other, flavor)


def check_type(degree, grid, flavor):
    if degree not in (0, 1, 2):
        raise WrongDegree(f"degree must be 0, 1 or 2, got {degree}")
    if grid not in GRIDS:
        raise ValueError(f"grid must be one of {GRIDS}, got {grid!r}")
    if degree == 1 and flavor not in FLAVORS:
        raise ValueError(f"edge cochains need a flavor in {FLAVORS}, got {flavor!r}")
    if degree != 1 and flavor is not None:
        raise ValueError("flavor is only meaningful for degree-1 cochains")


@dataclass(frozen=True, eq=False)
class Cochain:
    degree: int
    grid: str
    values: np.ndarray
    flavor: Optional[str] = None

    def __post_init__(self):
        check_type(self.degree, self.grid, self.flavor)
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("cochain values must be a 1-D array")
        object.__setattr__(self, "values", v)

    @property
    def type(self):
        return FormType(self.degree, self.grid, self.flavor)

    def __len__(self):
        return len(self.values)

    def with_values(self, values):
        return Cochain(self.degree, self.grid, values, self.flavor)

    def _same(self, other):
        if not isinstance(other, Cochain) or other.type != self.type:
            raise TypeError(f"cannot combine {self.type} with {getattr(other, 'type', other)}")
        if len(other) != len(self):
            raise ValueError("cochains have different lengths")

    def __add__(self, other):
        self._same(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        self._same(other)
        return self.with_values(self.values - other.values)

    def __neg__(self):
        return self.with_values(-self.values)

    def __mul__(self, scalar):
        if isinstance(scalar, Cochain):
            return NotImplemented
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self.with_values(self.values / scalar)

    def __repr__(self):
        return f"Cochain({self.type}, n={len(self)})"


def zeros(mesh, degree, grid, flavor=None):
    n = mesh.topology.count(degree, grid)
    return Cochain(degree, grid, np.zeros(n), flavor)


def constant(mesh, value, degree, grid, flavor=None):
    n = mesh.topology.count(degree, grid)
    return Cochain(degree, grid, np.full(n, float(value)), flavor)


@dataclass(frozen=True)
class AnalyticField:
    """A periodic field given by a vectorized function of (x, y).

    Scalar fields return an array; vector fields return a pair of arrays.
    """

    func: Callable
    vector: bool = False

    @classmethod
    def scalar(cls, func):
        return cls(func, False)

    @classmethod
    def vector_field(cls, func):
        return cls(func, True)

    def __call__(self, x, y):
        out = self.func(x, y)
        if self.vector:
            fx, fy = out
            return np.broadcast_to(fx, np.shape(x)), np.broadcast_to(fy, np.shape(x))
        return np.broadcast_to(out, np.shape(x))


def reinterpret_flavor(c: Cochain) -> Cochain:
    """Toggle the flavor of an edge cochain, keeping the values untouched.

    This is the one place where a 1-form is deliberately read as an
    (n-1)-form or vice versa.
    """
    if c.degree != 1:
        raise WrongDegree(f"only edge cochains have a flavor, got degree {c.degree}")
    other = "flux" if c.flavor == "circulation" else "circulation"
    return Cochain(1, c.grid, c.values, other)


# --- reduction ---------------------------------------------------------

def _points(mesh, grid):
    g = mesh.geometry
    return g.vertex_xy if grid == "straight" else g.tvertex_xy


def reduce_scalar(f: AnalyticField, k: int, grid: str, mesh) -> Cochain:
    """Point values (k=0) or cell integrals (k=2) of a scalar field."""
    if k == 1:
        raise WrongDegree("reduce_scalar handles k=0 and k=2; use reduce_vector for edges")
    check_type(k, grid, None)
    if f.vector:
        raise TypeError("reduce_scalar needs a scalar field")
    if k == 0:
        p = _points(mesh, grid)
        return Cochain(0, grid, np.array(f(p[:, 0], p[:, 1]), dtype=float))
    pts, w, owner = cell_rule(mesh, grid)
    vals = np.bincount(owner, weights=w * f(pts[:, 0], pts[:, 1]),
                       minlength=mesh.topology.count(2, grid))
    return Cochain(2, grid, vals)


def edge_segments(mesh, grid):
    g = mesh.geometry
    pts = g.edge_points if grid == "straight" else g.tedge_points
    return pts[:, 0], pts[:, 1]


def reduce_vector(X: AnalyticField, flavor: str, grid: str, mesh) -> Cochain:
    """Line integrals of the tangential or normal component over every edge."""
    check_type(1, grid, flavor)
    if not X.vector:
        raise TypeError("reduce_vector needs a vector field")
    p0, p1 = edge_segments(mesh, grid)
    d = p1 - p0
    if flavor == "flux":
        d = np.stack([d[:, 1], -d[:, 0]], axis=1)
    pts, w = line_points(p0, p1)
    fx, fy = X(pts[..., 0], pts[..., 1])
    vals = (fx * d[:, 0:1] + fy * d[:, 1:2]) @ w
    return Cochain(1, grid, vals, flavor)


def cell_measure(mesh, degree, grid):
    """Size of each k-cell: 1 for vertices, length for edges, area for cells."""
    g = mesh.geometry
    if degree == 0:
        return np.ones(mesh.topology.count(0, grid))
    if degree == 1:
        return g.edge_length if grid == "straight" else g.tedge_length
    return g.cell_area if grid == "straight" else g.tcell_area


def pointwise_values(mesh, c: Cochain):
    """Cochain values divided by the size of their cells (a density)."""
    return c.values / cell_measure(mesh, c.degree, c.grid)


_SCALED = {(2, "twisted"): None, (1, "straight"): "circulation"}


def scale_dofs(mesh, point_values, degree: int, grid: str) -> Cochain:
    """Convert point values of a C-grid model into cochain values.

    Heights (twisted cells) are multiplied by the twisted cell area and
    velocities (straight edges) by the edge length.
    """
    if (degree, grid) not in _SCALED:
        raise UnsupportedScaling(f"no degree-of-freedom scaling for a {grid} {degree}-form")
    vals = np.asarray(point_values, dtype=float) * cell_measure(mesh, degree, grid)
    return Cochain(degree, grid, vals, _SCALED[(degree, grid)])


def unscale_dofs(mesh, c: Cochain):
    if (c.degree, c.grid) not in _SCALED or c.flavor != _SCALED[(c.degree, c.grid)]:
        raise UnsupportedScaling(f"no degree-of-freedom scaling for {c.type}")
    return pointwise_values(mesh, c)


# --- pairing -------------------------------------------------------------

def pairing_sign(first: FormType):
    if first.grid == "straight":
        return 1.0
    k = first.degree
    return float((-1) ** (k * (DIM - k)))


def topological_pairing(a: Cochain, b: Cochain) -> float:
    """Metric-free pairing of a k-form with an (n-k)-form on the other grid.

    Straight-first pairings are plain dot products; twisted-first pairings
    carry the sign (-1)^(k(n-k)), which is -1 for edge cochains.
    """
    if b.type != a.type.dual():
        raise PairingTypeError(f"cannot pair {a.type} with {b.type}; expected {a.type.dual()}")
    if len(a) != len(b):
        raise PairingTypeError("paired cochains have different lengths")
    return pairing_sign(a.type) * float(np.dot(a.values, b.values))


# --- export --------------------------------------------------------------

def representative_points(mesh, degree, grid):
    g = mesh.geometry
    if degree == 0:
        return _points(mesh, grid)
    if degree == 1:
        p0, p1 = edge_segments(mesh, grid)
        return g.wrap(0.5 * (p0 + p1))
    # cell centers are the dual vertices
    return g.tvertex_xy if grid == "straight" else g.vertex_xy


def export_cochain(mesh, c: Cochain, destination, name="value"):
    """Write one row per k-cell: id, x, y, raw value, pointwise value."""
    xy = representative_points(mesh, c.degree, c.grid)
    point = pointwise_values(mesh, c)
    lines = [f"# {name}: {c.type}", "id x y value pointwise"]
    lines += [f"{i} {x:.17g} {y:.17g} {v:.17g} {p:.17g}"
              for i, ((x, y), v, p) in enumerate(zip(xy, c.values, point))]
    with open(destination, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_cochain_values(source):
    """Raw values column of a file written by :func:`export_cochain`."""
    rows = np.loadtxt(source, skiprows=2, ndmin=2)
    return rows[:, 3]
