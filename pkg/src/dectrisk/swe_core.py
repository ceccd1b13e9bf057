"""Rotating shallow-water dynamics in Hamiltonian form on a straight/twisted mesh pair.

Prognostic fields are the relative velocity ``u`` (straight circulation)
and the fluid height ``h`` (twisted 2-form).  The Coriolis term enters as a
prescribed straight 2-form ``f`` in the absolute vorticity ``eta = D2 u + f``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .cochain import Cochain, reinterpret_flavor, zeros
from .dec_ops import build_d, hodge_stars
from .errors import PVSingularity, UnsupportedVariant
from .wedge import Q_VARIANTS, build_pv_operators, build_T, ke_wedge, massflux_adjoint

R_KINDS = ("metric", "combinatorial")
T_KINDS = ("metric", "combinatorial")


@dataclass(frozen=True)
class SchemeConfig:
    """Operator choices that define one TRiSK-type scheme."""

    r_kind: str = "metric"
    q_variant: str = "TE"
    t_kind: str = "metric"
    hodge: str = "voronoi"
    name: str = "custom"

    def __post_init__(self):
        if self.r_kind not in R_KINDS:
            raise ValueError(f"R kind must be one of {R_KINDS}, got {self.r_kind!r}")
        if self.q_variant not in Q_VARIANTS:
            raise UnsupportedVariant(f"Q variant must be one of {Q_VARIANTS}, got {self.q_variant!r}")
        if self.t_kind not in T_KINDS:
            raise ValueError(f"T kind must be one of {T_KINDS}, got {self.t_kind!r}")
        if self.hodge != "voronoi":
            raise ValueError(f"only the voronoi Hodge star is available, got {self.hodge!r}")

    @classmethod
    def preset(cls, name):
        try:
            r, q, t = PRESETS[name]
        except KeyError:
            raise ValueError(f"unknown scheme preset {name!r}; choose from {sorted(PRESETS)}") from None
        return cls(r, q, t, "voronoi", name)

    def describe(self):
        return f"hodge={self.hodge} R={self.r_kind} Q={self.q_variant} T={self.t_kind}"


# preset -> (R kind, Q variant, T kind), all with the Voronoi Hodge star
PRESETS = {
    "al81": ("combinatorial", "DBL", "combinatorial"),
    "trsk2010-te": ("metric", "TE", "metric"),
    "trsk2010-pe": ("metric", "PE", "metric"),
    "eldred-dbl": ("metric", "DBL", "metric"),
    "accur": ("metric", "ACCUR", "metric"),
}


@dataclass(frozen=True, eq=False)
class Operators:
    """Everything the tendencies need for one mesh and scheme."""

    mesh: object
    scheme: SchemeConfig
    D1: object
    D2: object
    Dbar1: object
    Dbar2: object
    hodge: dict
    pv: object
    T: object

    @property
    def H1(self):
        return self.hodge["H1"]

    @property
    def Hbar2(self):
        return self.hodge["Hbar2"]

    @property
    def H2(self):
        return self.hodge["H2"]

    @property
    def H0(self):
        return self.hodge["H0"]

    @property
    def Q(self):
        return self.pv.Q

    @property
    def R(self):
        return self.pv.R

    @property
    def W(self):
        return self.pv.W


@lru_cache(maxsize=32)
def build_operators(mesh, scheme: SchemeConfig) -> Operators:
    return Operators(
        mesh, scheme,
        build_d(mesh, 1, "straight"), build_d(mesh, 2, "straight"),
        build_d(mesh, 1, "twisted"), build_d(mesh, 2, "twisted"),
        hodge_stars(mesh),
        build_pv_operators(mesh, scheme.r_kind, scheme.q_variant),
        build_T(scheme.t_kind, mesh),
    )


@dataclass(frozen=True, eq=False)
class PhysicsParams:
    """Gravity, Coriolis 2-form f (straight) and topography (twisted 2-form)."""

    g: float
    coriolis: Cochain
    topography: Cochain

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError(f"gravity must be positive, got {self.g}")
        if self.coriolis.type != (2, "straight", None):
            raise TypeError(f"Coriolis term must be a straight 2-form, got {self.coriolis.type}")
        if self.topography.type != (2, "twisted", None):
            raise TypeError(f"topography must be a twisted 2-form, got {self.topography.type}")

    @classmethod
    def uniform(cls, mesh, g, f0=0.0, topography=None):
        """Constant Coriolis parameter f0 (per unit area) and optional topography."""
        f = Cochain(2, "straight", f0 * mesh.geometry.cell_area)
        hs = topography if topography is not None else zeros(mesh, 2, "twisted")
        return cls(float(g), f, hs)

    def coriolis_point(self, ops):
        """f as a twisted 0-form (H2 f)."""
        return ops.H2(self.coriolis)

    def topography_point(self, ops):
        """Topography as a straight 0-form (Hbar2 hs)."""
        return ops.Hbar2(self.topography)


@dataclass(frozen=True, eq=False)
class ModelState:
    u: Cochain
    h: Cochain
    time: float = 0.0

    def __post_init__(self):
        if self.u.type != (1, "straight", "circulation"):
            raise TypeError(f"velocity must be a straight circulation, got {self.u.type}")
        if self.h.type != (2, "twisted", None):
            raise TypeError(f"height must be a twisted 2-form, got {self.h.type}")

    def advanced(self, tendency: "Tendency", dt: float) -> "ModelState":
        """Explicit Euler update ``state + dt * tendency``."""
        return ModelState(self.u + dt * tendency.u, self.h + dt * tendency.h, self.time + dt)

    def vector(self):
        return np.concatenate([self.u.values, self.h.values])

    def with_vector(self, x, time=None):
        n = len(self.u)
        return ModelState(self.u.with_values(x[:n]), self.h.with_values(x[n:]),
                          self.time if time is None else time)


class Tendency(NamedTuple):
    h: Cochain
    u: Cochain

    def vector(self):
        return np.concatenate([self.u.values, self.h.values])


class FunctionalDerivatives(NamedTuple):
    F: Cochain  # twisted flux, dH/du
    B: Cochain  # straight 0-form, dH/dh


def height_point(state, ops) -> Cochain:
    """h as a straight 0-form (Hbar2 h)."""
    return ops.Hbar2(state.h)


def kinetic_energy(state, ops) -> Cochain:
    """Twisted 2-form K = (u ^ H1 u) / 2."""
    return 0.5 * ke_wedge(ops.T, state.u, ops.H1(state.u))


def _twisted2_inner(ops, a, b):
    return float(np.dot(a.values, ops.Hbar2.matrix @ b.values))


def hamiltonian(state, params, ops) -> float:
    """Potential plus kinetic energy."""
    h = state.h
    pe = 0.5 * params.g * _twisted2_inner(ops, h, h) + params.g * _twisted2_inner(ops, h, params.topography)
    return pe + _twisted2_inner(ops, h, kinetic_energy(state, ops))


def functional_derivatives(state, params, ops) -> FunctionalDerivatives:
    """Mass flux F and Bernoulli function B."""
    h0 = height_point(state, ops)
    ut = ops.H1(state.u)
    F = 0.5 * massflux_adjoint(ops.T, h0, ut) + 0.5 * ops.H1(massflux_adjoint(ops.T, h0, state.u))
    B = 0.5 * ops.Hbar2(ke_wedge(ops.T, state.u, ut)) + params.g * (h0 + params.topography_point(ops))
    return FunctionalDerivatives(F, B)


def absolute_vorticity(state, params, ops) -> Cochain:
    return ops.D2(state.u) + params.coriolis


def diagnosed_thickness(state, ops) -> Cochain:
    """R h: the height averaged onto straight cells (a straight 2-form)."""
    return ops.R.op(state.h)


def diagnose_pv(state, params, ops) -> Cochain:
    """Twisted 0-form q with q_c (R h)_c = eta_c."""
    rh = diagnosed_thickness(state, ops).values
    bad = np.flatnonzero(~(rh > 0))
    if bad.size:
        raise PVSingularity(bad)
    eta = absolute_vorticity(state, params, ops).values
    return Cochain(0, "twisted", eta / rh)


def tendencies(state, params, ops, derivs=None, q=None) -> Tendency:
    """dh/dt = -Dbar2 F and du/dt = -Q(q, F) - D1 B."""
    if derivs is None:
        derivs = functional_derivatives(state, params, ops)
    if q is None:
        q = diagnose_pv(state, params, ops)
    dh = -ops.Dbar2(derivs.F)
    du = -ops.Q(q, derivs.F) - ops.D1(derivs.B)
    return Tendency(dh, du)


def potential_enstrophy(state, params, ops, q=None) -> float:
    """(1/2) sum_c q_c^2 (R h)_c."""
    if q is None:
        q = diagnose_pv(state, params, ops)
    return 0.5 * float(np.dot(q.values ** 2, diagnosed_thickness(state, ops).values))


def invariant_rates(state, tend: Tendency, params, ops) -> dict:
    """Time derivatives of mass, circulation, energy and potential enstrophy.

    Each rate is the chain rule applied to the given tendency.  ``*_scale``
    entries are sums of absolute values of the summed terms, the natural
    size of roundoff in each rate.
    """
    derivs = functional_derivatives(state, params, ops)
    q = diagnose_pv(state, params, ops)
    deta = ops.D2(tend.u).values
    energy_terms = np.concatenate([tend.u.values * derivs.F.values, tend.h.values * derivs.B.values])
    # dPE/du = Dbar1 q (as a twisted flux), dPE/dh = -R^T(q^2)/2
    dpe_du = reinterpret_flavor(ops.Dbar1(q)).values
    dpe_dh = -0.5 * (ops.R.matrix.T @ q.values ** 2)
    pe_terms = np.concatenate([tend.u.values * dpe_du, tend.h.values * dpe_dh])
    return {
        "dM_dt": float(tend.h.values.sum()),
        "dC_dt": float(deta.sum()),
        "dH_dt": float(energy_terms.sum()),
        "dPE_dt": float(pe_terms.sum()),
        "dM_dt_scale": float(np.abs(tend.h.values).sum()),
        "dC_dt_scale": float(np.abs(deta).sum()),
        "dH_dt_scale": float(np.abs(energy_terms).sum()),
        "dPE_dt_scale": float(np.abs(pe_terms).sum()),
    }


def linearized_tendencies(state, params, ops, mean_depth) -> Tendency:
    """Tendencies linearized about rest at depth ``mean_depth`` (a pointwise height)."""
    if not mean_depth > 0:
        raise ValueError(f"reference depth must be positive, got {mean_depth}")
    F = mean_depth * ops.H1(state.u)
    B = params.g * (height_point(state, ops) + params.topography_point(ops))
    q_lin = params.coriolis_point(ops) / mean_depth
    return Tendency(-ops.Dbar2(F), -ops.Q(q_lin, F) - ops.D1(B))


def diagnostics(state, params, ops) -> dict:
    q = diagnose_pv(state, params, ops)
    h_pt = height_point(state, ops).values
    speed = np.abs(state.u.values) / ops.mesh.geometry.edge_length
    return {
        "mass": float(state.h.values.sum()),
        "circulation": float(absolute_vorticity(state, params, ops).values.sum()),
        "energy": hamiltonian(state, params, ops),
        "potential_enstrophy": potential_enstrophy(state, params, ops, q),
        "min_h": float(h_pt.min()),
        "max_h": float(h_pt.max()),
        "max_u": float(speed.max()) if speed.size else 0.0,
    }


def rest_state(mesh, depth, time=0.0) -> ModelState:
    """u = 0 and uniform pointwise height ``depth``."""
    return ModelState(zeros(mesh, 1, "straight", "circulation"),
                      Cochain(2, "twisted", depth * mesh.geometry.tcell_area), time)


def nonlinear_model(params, ops):
    """Closure ``state -> Tendency`` for the full equations."""
    return lambda state: tendencies(state, params, ops)


def linear_model(params, ops, mean_depth):
    """Closure ``state -> Tendency`` for the equations linearized about rest."""
    return lambda state: linearized_tendencies(state, params, ops, mean_depth)
