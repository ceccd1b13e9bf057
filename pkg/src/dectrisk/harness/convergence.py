"""Operator convergence against vector-calculus oracles on refined periodic meshes.

Test fields are plane waves whose wave vectors are integer combinations of
the reciprocal lattice, so they are periodic on square and rhombic domains
alike.  The vector field is X = grad a + k x grad b, which gives closed forms
for div X = lap a and curl X = lap b.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..cochain import AnalyticField, reduce_scalar, reduce_vector
from ..dec_ops import build_d, hodge_stars
from ..mesh import build_periodic_quad, build_periodic_trihex
from ..quadrature import polygon_rule
from ..wedge import build_R, build_T, ke_wedge

OPERATORS = ("divergence", "curl", "gradient", "perp", "averaging", "kinetic-energy",
             "cell-reduction", "edge-reduction")
FAMILIES = ("quad", "trihex")


@dataclass
class PlaneWave:
    """A sin(2 pi k.x + phase) with k = L^-T m."""

    amplitude: float
    m: tuple
    phase: float

    def wavevector(self, lattice):
        return np.linalg.solve(lattice.T, np.asarray(self.m, dtype=float))

    def value(self, lattice, x, y):
        k = self.wavevector(lattice)
        return self.amplitude * np.sin(2 * np.pi * (k[0] * x + k[1] * y) + self.phase)

    def gradient(self, lattice, x, y):
        k = self.wavevector(lattice)
        c = 2 * np.pi * self.amplitude * np.cos(2 * np.pi * (k[0] * x + k[1] * y) + self.phase)
        return c * k[0], c * k[1]

    def laplacian(self, lattice, x, y):
        k = self.wavevector(lattice)
        return -4 * np.pi ** 2 * float(k @ k) * self.value(lattice, x, y)


# potential a and stream function b of the vector test field
POTENTIAL = PlaneWave(1.0, (1, 2), 0.3)
STREAM = PlaneWave(0.7, (2, -1), 1.1)


def scalar_field(lattice):
    return AnalyticField.scalar(lambda x, y: POTENTIAL.value(lattice, x, y))


def vector_field(lattice):
    def X(x, y):
        ax, ay = POTENTIAL.gradient(lattice, x, y)
        bx, by = STREAM.gradient(lattice, x, y)
        return ax - by, ay + bx

    return AnalyticField.vector_field(X)


def family_mesh(family, n):
    """Unit-period mesh with n cells per period."""
    if family == "quad":
        return build_periodic_quad(n, 1.0 / n)
    if family == "trihex":
        return build_periodic_trihex(n, 1.0 / n)
    raise ValueError(f"unknown mesh family {family!r}; choose from {FAMILIES}")


def _edge_midpoints(mesh):
    p = mesh.geometry.edge_points
    return 0.5 * (p[:, 0] + p[:, 1]), p[:, 1] - p[:, 0]


def operator_error(operator, mesh):
    """(numerical, exact) point values for one operator on one mesh."""
    g = mesh.geometry
    L = g.lattice
    X = vector_field(L)
    hodge = hodge_stars(mesh)
    if operator == "divergence":
        flux = reduce_vector(X, "flux", "twisted", mesh)
        num = hodge["Hbar2"](build_d(mesh, 2, "twisted")(flux)).values
        x, y = g.vertex_xy.T
        return num, POTENTIAL.laplacian(L, x, y)
    if operator == "curl":
        circ = reduce_vector(X, "circulation", "straight", mesh)
        num = hodge["H2"](build_d(mesh, 2, "straight")(circ)).values
        x, y = g.tvertex_xy.T
        return num, STREAM.laplacian(L, x, y)
    if operator in ("gradient", "edge-reduction"):
        mid, d = _edge_midpoints(mesh)
        t_hat = d / g.edge_length[:, None]
        if operator == "gradient":
            num = build_d(mesh, 1, "straight")(reduce_scalar(scalar_field(L), 0, "straight", mesh)).values
            gx, gy = POTENTIAL.gradient(L, mid[:, 0], mid[:, 1])
            return num / g.edge_length, gx * t_hat[:, 0] + gy * t_hat[:, 1]
        # the circulation of a gradient is exactly the difference of end values
        grad = AnalyticField.vector_field(lambda x, y: POTENTIAL.gradient(L, x, y))
        num = reduce_vector(grad, "circulation", "straight", mesh).values
        p = g.edge_points
        exact = POTENTIAL.value(L, p[:, 1, 0], p[:, 1, 1]) - POTENTIAL.value(L, p[:, 0, 0], p[:, 0, 1])
        return num / g.edge_length, exact / g.edge_length
    if operator == "perp":
        circ = reduce_vector(X, "circulation", "straight", mesh)
        num = hodge["H1"](circ).values / g.tedge_length
        mid, d = _edge_midpoints(mesh)
        t_hat = d / g.edge_length[:, None]
        fx, fy = X(mid[:, 0], mid[:, 1])
        return num, fx * t_hat[:, 0] + fy * t_hat[:, 1]
    if operator == "averaging":
        h = reduce_scalar(scalar_field(L), 2, "twisted", mesh)
        num = build_R(mesh, "metric").op(h).values / g.cell_area
        x, y = g.tvertex_xy.T
        return num, POTENTIAL.value(L, x, y)
    if operator == "kinetic-energy":
        u = reduce_vector(X, "circulation", "straight", mesh)
        num = ke_wedge(build_T("metric", mesh), u, hodge["H1"](u)).values / g.tcell_area
        x, y = g.vertex_xy.T
        fx, fy = X(x, y)
        return num, fx ** 2 + fy ** 2
    if operator == "cell-reduction":
        f = scalar_field(L)
        num = reduce_scalar(f, 2, "twisted", mesh).values / g.tcell_area
        return num, _refined_cell_averages(g.tcell_polygons, f)
    raise ValueError(f"unknown operator {operator!r}; choose from {OPERATORS}")


def _refined_cell_averages(polygons, f, levels=2):
    """Reference cell averages from the fan rule on 4**levels subtriangles per fan triangle."""
    out = np.zeros(len(polygons))
    for i, poly in enumerate(polygons):
        center = poly.mean(axis=0)
        tris = [np.array([a, b, center]) for a, b in zip(poly, np.roll(poly, -1, axis=0))]
        for _ in range(levels):
            nxt = []
            for a, b, c in tris:
                ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
                nxt += [np.array(t) for t in ([a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca])]
            tris = nxt
        pts, w, _ = polygon_rule([t for t in tris])
        out[i] = np.dot(w, f(pts[:, 0], pts[:, 1])) / w.sum()
    return out


@dataclass
class ConvergenceReport:
    operator: str
    family: str
    sizes: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    linf: list = field(default_factory=list)

    @staticmethod
    def _orders(sizes, errs):
        out = []
        for i in range(1, len(sizes)):
            if errs[i] <= 0 or errs[i - 1] <= 0:
                out.append(float("nan"))
            else:
                out.append(float(np.log(errs[i - 1] / errs[i]) / np.log(sizes[i] / sizes[i - 1])))
        return out

    @property
    def orders_l2(self):
        return self._orders(self.sizes, self.l2)

    @property
    def orders_linf(self):
        return self._orders(self.sizes, self.linf)

    def table(self):
        lines = [f"{self.operator} on {self.family}",
                 f"{'N':>5} {'L2':>12} {'Linf':>12} {'order L2':>9} {'order Linf':>10}"]
        o2 = [None] + self.orders_l2
        oi = [None] + self.orders_linf
        for n, a, b, p, q in zip(self.sizes, self.l2, self.linf, o2, oi):
            ps = f"{p:9.3f}" if p is not None else " " * 9
            qs = f"{q:10.3f}" if q is not None else " " * 10
            lines.append(f"{n:5d} {a:12.4e} {b:12.4e} {ps} {qs}")
        return "\n".join(lines)


def convergence_study(operator, family, resolutions) -> ConvergenceReport:
    """Errors of ``operator`` on the ``family`` meshes with the given cells per period."""
    resolutions = list(resolutions)
    if len(resolutions) < 2:
        raise ValueError("a convergence study needs at least 2 resolutions")
    if operator not in OPERATORS:
        raise ValueError(f"unknown operator {operator!r}; choose from {OPERATORS}")
    report = ConvergenceReport(operator, family)
    for n in resolutions:
        num, exact = operator_error(operator, family_mesh(family, n))
        err = np.asarray(num) - np.asarray(exact)
        report.sizes.append(int(n))
        report.l2.append(float(np.sqrt(np.mean(err ** 2))))
        report.linf.append(float(np.max(np.abs(err))))
    return report
