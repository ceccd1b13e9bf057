"""Initial-condition presets.  Each returns ``(state, physics)``."""
from __future__ import annotations

import numpy as np

from ..cochain import AnalyticField, Cochain, reduce_scalar, reinterpret_flavor
from ..errors import ConfigError
from ..swe_core import ModelState, PhysicsParams, rest_state

PRESETS = ("rest", "gaussian-hill", "vortex-pair", "geostrophic-balance", "uniform-pv")

DEFAULTS = {
    "rest": {"depth": 1.0},
    "gaussian-hill": {"depth": 1.0, "amplitude": 0.1, "width": 0.1, "center": (0.5, 0.5)},
    "vortex-pair": {"depth": 1.0, "amplitude": 0.05, "width": 0.1, "separation": 0.25},
    "geostrophic-balance": {"depth": 10.0, "amplitude": 0.01, "seed": 0},
    "uniform-pv": {"depth": 1.0, "q0": 1.0, "amplitude": 0.05, "seed": 0},
}


def periodic_displacement(mesh, x, y, center):
    """Shortest periodic displacement from ``center`` (absolute coordinates) to (x, y)."""
    L = mesh.geometry.lattice
    d = np.stack([np.asarray(x) - center[0], np.asarray(y) - center[1]], axis=-1)
    frac = np.linalg.solve(L, d.reshape(-1, 2).T).T
    frac -= np.round(frac)
    d = (frac @ L.T).reshape(d.shape)
    return d[..., 0], d[..., 1]


def domain_point(mesh, frac):
    """Absolute coordinates of lattice-fractional coordinates ``frac``."""
    return mesh.geometry.lattice @ np.asarray(frac, dtype=float)


def gaussian(mesh, center, width):
    """Periodic Gaussian bump exp(-r^2 / (2 w^2)), ``width`` in units of the first period."""
    w = width * np.linalg.norm(mesh.geometry.lattice[:, 0])

    def f(x, y):
        dx, dy = periodic_displacement(mesh, x, y, center)
        return np.exp(-(dx ** 2 + dy ** 2) / (2 * w * w))

    return AnalyticField.scalar(f)


def _merge(preset, params):
    if preset not in PRESETS:
        raise ConfigError(f"unknown initial condition {preset!r}; choose from {PRESETS}")
    merged = dict(DEFAULTS[preset])
    for k, v in (params or {}).items():
        if k not in merged:
            raise ConfigError(f"initial condition {preset!r} has no parameter {k!r}")
        merged[k] = v
    return merged


def initial_condition(preset, params, mesh, physics: PhysicsParams, ops):
    """Build the initial state; ``uniform-pv`` also replaces the Coriolis term.

    Lengths are fractions of the first lattice period.
    """
    p = _merge(preset, params)
    depth = float(p["depth"])
    if preset == "rest":
        return rest_state(mesh, depth), physics
    if preset == "gaussian-hill":
        bump = gaussian(mesh, domain_point(mesh, p["center"]), p["width"])
        h = reduce_scalar(AnalyticField.scalar(lambda x, y: depth + p["amplitude"] * bump(x, y)),
                          2, "twisted", mesh)
        return ModelState(rest_state(mesh, depth).u, h), physics
    if preset == "vortex-pair":
        return _vortex_pair(mesh, physics, ops, depth, p), physics
    if preset == "geostrophic-balance":
        rng = np.random.default_rng(p["seed"])
        psi = Cochain(0, "twisted", p["amplitude"] * rng.standard_normal(mesh.topology.n_cells))
        return geostrophic_state(mesh, physics, ops, depth, psi), physics
    return _uniform_pv(mesh, physics, ops, depth, p)


def nondivergent_velocity(ops, psi: Cochain):
    """u = H1^-1 (Dbar1 psi read as a flux): a velocity with zero discrete divergence."""
    ut = reinterpret_flavor(ops.Dbar1(psi))
    return Cochain(1, "straight", ut.values / ops.H1.diagonal(), "circulation")


def geostrophic_state(mesh, physics, ops, depth, psi):
    """Discretely balanced state of the equations linearized about rest at ``depth``.

    With u from the streamfunction psi and h0 = depth - (f0/g) R^T psi, the
    PV flux of the geostrophic velocity cancels the pressure gradient because
    W Dbar1 = D1 R^T.  Requires constant f.
    """
    f_pt = physics.coriolis_point(ops).values
    f0 = float(f_pt.mean())
    if not np.allclose(f_pt, f0, rtol=1e-12, atol=1e-14):
        raise ConfigError("geostrophic-balance needs a constant Coriolis parameter")
    u = nondivergent_velocity(ops, psi)
    h0 = depth - (f0 / physics.g) * (ops.R.matrix.T @ psi.values)
    h = ops.H0(Cochain(0, "straight", h0))
    return ModelState(u, h)


def _vortex_pair(mesh, physics, ops, depth, p):
    """Two opposite Gaussian vortices side by side, with h in linear geostrophic balance."""
    half = 0.5 * p["separation"]
    centers = [domain_point(mesh, (0.5 - half, 0.5)), domain_point(mesh, (0.5 + half, 0.5))]
    a, b = (gaussian(mesh, c, p["width"]) for c in centers)
    xy = mesh.geometry.tvertex_xy
    scale = p["amplitude"] * np.linalg.norm(mesh.geometry.lattice[:, 0])
    psi = Cochain(0, "twisted", scale * (a(xy[:, 0], xy[:, 1]) - b(xy[:, 0], xy[:, 1])))
    return geostrophic_state(mesh, physics, ops, depth, psi)


def _uniform_pv(mesh, physics, ops, depth, p):
    """Random state with f chosen so that q equals q0 everywhere."""
    rng = np.random.default_rng(p["seed"])
    t, g = mesh.topology, mesh.geometry
    u = Cochain(1, "straight", p["amplitude"] * rng.standard_normal(t.n_edges) * g.edge_length,
                "circulation")
    h = Cochain(2, "twisted", depth * (1 + p["amplitude"] * rng.random(t.n_vertices)) * g.tcell_area)
    state = ModelState(u, h)
    f = p["q0"] * ops.R.op(h).values - ops.D2(u).values
    return state, PhysicsParams(physics.g, Cochain(2, "straight", f), physics.topography)
