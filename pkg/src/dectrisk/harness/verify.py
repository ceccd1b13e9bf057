"""The property suite behind ``dectrisk verify``.

Every item records a measured value and the tolerance it is held to.  Items
marked non-gating are diagnostics: properties that the operator choice is
not expected to have (for example energy conservation with a PV flux that
is not antisymmetric).  They are reported but never fail the suite.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..cochain import Cochain, constant, reinterpret_flavor, topological_pairing
from ..dbl import dbl_supported
from ..dec_ops import build_d, check_transpose_duality, hodge_stars
from ..mesh import build_mesh
from ..swe_core import (PRESETS, ModelState, PhysicsParams, SchemeConfig, build_operators,
                        diagnose_pv, hamiltonian, invariant_rates, linear_model,
                        linearized_tendencies, nonlinear_model, potential_enstrophy, tendencies)
from ..timestep import IntegratorConfig, run
from ..wedge import (IDENTITY_TOL, Q_VARIANTS, build_pv_operators, build_R, build_T,
                     build_W_from_R, enstrophy_rule_residual, full_leibniz_residual, ke_wedge,
                     massflux_adjoint, pairing_antisymmetry_residual, w_identity_residuals)
from .initial import geostrophic_state, initial_condition

DEFAULT_MESHES = ("quad:8", "quad:9:0.5", "trihex:4")

RATE_LINEAR_TOL = 1e-14  # relative to the sum of absolute terms
RATE_QUADRATIC_TOL = 1e-12  # relative to the conserved quantity
GEOSTROPHIC_TOL = 1e-12
GEOSTROPHIC_DRIFT_TOL = 1e-10
UNIFORM_PV_TOL = 1e-11
LEIBNIZ_TOL = 1e-12

# which invariants each PV flux variant is expected to conserve
CONSERVES_ENERGY = {"TE", "DBL"}
CONSERVES_ENSTROPHY = {"DBL", "ACCUR"}
SATISFIES_ENSTROPHY_RULE = {"PE", "DBL"}
ANTISYMMETRIC = {"TE", "DBL"}


@dataclass
class CheckItem:
    group: str
    name: str
    value: float
    tolerance: float
    gating: bool = True

    @property
    def passed(self):
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)

    def line(self):
        status = ("PASS" if self.passed else "FAIL") if self.gating else "info"
        return f"{status:4}  {self.group:12} {self.name:48} {self.value:10.3e} <= {self.tolerance:.0e}"


@dataclass
class VerifyReport:
    mesh: str
    items: list = field(default_factory=list)
    seconds: float = 0.0

    def add(self, group, name, value, tolerance, gating=True):
        self.items.append(CheckItem(group, name, float(value), tolerance, gating))

    @property
    def failures(self):
        return [i for i in self.items if i.gating and not i.passed]

    @property
    def passed(self):
        return not self.failures

    def format(self):
        lines = [f"== {self.mesh} =="] + [i.line() for i in self.items]
        n_gate = sum(i.gating for i in self.items)
        lines.append(f"{n_gate - len(self.failures)}/{n_gate} gating checks passed "
                     f"({len(self.items) - n_gate} diagnostics) in {self.seconds:.2f} s")
        return "\n".join(lines)


def _max_abs(a):
    a = np.asarray(a.todense() if hasattr(a, "todense") else a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def random_state(mesh, rng, depth=10.0, amplitude=1.0):
    """Random velocity and a positive height near ``depth``."""
    g = mesh.geometry
    u = Cochain(1, "straight", amplitude * rng.standard_normal(mesh.topology.n_edges) * g.edge_length,
                "circulation")
    h = Cochain(2, "twisted", (depth + rng.random(mesh.topology.n_vertices)) * g.tcell_area)
    return ModelState(u, h)


def random_physics(mesh, rng, g=9.81, f0=1.0):
    topo = Cochain(2, "twisted", 0.1 * rng.random(mesh.topology.n_vertices) * mesh.geometry.tcell_area)
    return PhysicsParams.uniform(mesh, g, f0, topo)


def available_variants(mesh):
    """Q variants that can be built on this mesh with metric R."""
    R = build_R(mesh, "metric")
    return [v for v in Q_VARIANTS if v != "DBL" or dbl_supported(mesh, R)]


def available_presets(mesh):
    out = []
    for name, (r_kind, variant, _) in PRESETS.items():
        if variant == "DBL" and not dbl_supported(mesh, build_R(mesh, r_kind)):
            continue
        out.append(name)
    return out


# --- groups -------------------------------------------------------------

def check_dec_ops(report, mesh, rng):
    grp = "dec_ops"
    D1, D2 = build_d(mesh, 1, "straight"), build_d(mesh, 2, "straight")
    Db1, Db2 = build_d(mesh, 1, "twisted"), build_d(mesh, 2, "twisted")
    report.add(grp, "D2 D1 = 0", _max_abs(D2.matrix @ D1.matrix), IDENTITY_TOL)
    report.add(grp, "Dbar2 Dbar1 = 0", _max_abs(Db2.matrix @ Db1.matrix), IDENTITY_TOL)
    for name, value in check_transpose_duality(mesh).items():
        report.add(grp, name, value, IDENTITY_TOL)
    report.add(grp, "D1 (constant) = 0", _max_abs(D1(constant(mesh, 1.0, 0, "straight")).values),
               IDENTITY_TOL)
    report.add(grp, "Dbar1 (constant) = 0", _max_abs(Db1(constant(mesh, 1.0, 0, "twisted")).values),
               IDENTITY_TOL)
    x = rng.standard_normal(mesh.topology.n_edges)
    report.add(grp, "sum D2 x = 0 (Stokes)", abs((D2.matrix @ x).sum()) / np.abs(x).sum(), IDENTITY_TOL)
    report.add(grp, "sum Dbar2 x = 0 (Stokes)", abs((Db2.matrix @ x).sum()) / np.abs(x).sum(), IDENTITY_TOL)
    h = hodge_stars(mesh)
    for a, b, sign in [("Hbar1", "H1", -1.0), ("H0", "Hbar2", 1.0), ("Hbar0", "H2", 1.0)]:
        report.add(grp, f"{a} {b} = {int(sign):+d} I", _max_abs(h[a].diagonal() * h[b].diagonal() - sign),
                   IDENTITY_TOL)
    # integration by parts through the topological pairing
    f0 = Cochain(0, "straight", rng.standard_normal(mesh.topology.n_vertices))
    yt = Cochain(1, "twisted", rng.standard_normal(mesh.topology.n_edges), "flux")
    terms = [topological_pairing(D1(f0), yt), topological_pairing(f0, Db2(yt))]
    report.add(grp, "<<D1 x, y~>> + <<x, Dbar2 y~>> = 0", abs(sum(terms)) / max(map(abs, terms)), IDENTITY_TOL)
    u = Cochain(1, "straight", rng.standard_normal(mesh.topology.n_edges), "circulation")
    qt = Cochain(0, "twisted", rng.standard_normal(mesh.topology.n_cells))
    terms = [topological_pairing(D2(u), qt), topological_pairing(u, reinterpret_flavor(Db1(qt)))]
    report.add(grp, "<<D2 x, y~>> - <<x, Dbar1 y~>> = 0", abs(terms[0] - terms[1]) / max(map(abs, terms)),
               IDENTITY_TOL)


def check_wedges(report, mesh, rng, n_random=100):
    grp = "wedge"
    t = mesh.topology
    for r_kind in ("metric", "combinatorial"):
        R = build_R(mesh, r_kind)
        W = build_W_from_R(mesh, R, check=False)
        for name, value in w_identity_residuals(mesh, R, W).items():
            report.add(grp, f"{name} = 0 [{r_kind} R]", value, IDENTITY_TOL)
    variants = available_variants(mesh)
    ones = np.ones(t.n_cells)
    qs = [rng.standard_normal(t.n_cells) for _ in range(n_random)]
    for v in variants:
        pv = build_pv_operators(mesh, "metric", v)
        m = pv.Q.matrix(ones, t.n_edges)
        report.add(grp, f"Q^{v}(1, .) = W", _max_abs(m - pv.W.matrix), IDENTITY_TOL)
        anti = max(pairing_antisymmetry_residual(pv.Q, q) for q in qs)
        report.add(grp, f"Q^{v} pairing antisymmetry", anti, IDENTITY_TOL, gating=v in ANTISYMMETRIC)
        pens = max(enstrophy_rule_residual(mesh, pv, q) for q in qs)
        report.add(grp, f"Q^{v} enstrophy Leibniz rule", pens, IDENTITY_TOL,
                   gating=v in SATISFIES_ENSTROPHY_RULE)
        full = max(full_leibniz_residual(mesh, pv, qs[i], qs[-1 - i]) for i in range(n_random))
        report.add(grp, f"Q^{v} full Leibniz rule", full, LEIBNIZ_TOL, gating=v == "DBL")
    # adjoints of the PV and KE wedges
    R = build_R(mesh, "metric")
    x, y = rng.standard_normal(t.n_cells), rng.standard_normal(t.n_cells)
    h = rng.standard_normal(t.n_vertices)
    lhs = float(np.dot(y, R.wedge.apply_values(x, h)))
    rhs = float(np.dot(h, R.matrix.T @ (x * y)))
    report.add(grp, "R wedge adjoint", abs(lhs - rhs) / max(abs(lhs), abs(rhs)), IDENTITY_TOL)
    hodge = hodge_stars(mesh)
    for kind in ("metric", "combinatorial"):
        T = build_T(kind, mesh)
        u = Cochain(1, "straight", rng.standard_normal(t.n_edges), "circulation")
        ut = hodge["H1"](u)
        h0 = Cochain(0, "straight", rng.standard_normal(t.n_vertices))
        lhs = float(np.dot(h0.values, ke_wedge(T, u, ut).values))
        rhs = float(np.dot(u.values, massflux_adjoint(T, h0, ut).values))
        report.add(grp, f"KE wedge adjoint [{kind} T]", abs(lhs - rhs) / max(abs(lhs), abs(rhs)), IDENTITY_TOL)
        diff = hodge["H1"](massflux_adjoint(T, h0, u)).values - massflux_adjoint(T, h0, ut).values
        report.add(grp, f"H1 adj(h, u) = adj(h, H1 u) [{kind} T]",
                   _max_abs(diff) / _max_abs(massflux_adjoint(T, h0, ut).values), IDENTITY_TOL)


def check_rates(report, mesh, rng, n_random=100):
    grp = "swe rates"
    states = [(random_state(mesh, rng), random_physics(mesh, rng)) for _ in range(n_random)]
    for name in available_presets(mesh):
        ops = build_operators(mesh, SchemeConfig.preset(name))
        worst = {"dM": 0.0, "dC": 0.0, "dH": 0.0, "dPE": 0.0}
        for state, params in states:
            r = invariant_rates(state, tendencies(state, params, ops), params, ops)
            worst["dM"] = max(worst["dM"], abs(r["dM_dt"]) / r["dM_dt_scale"])
            worst["dC"] = max(worst["dC"], abs(r["dC_dt"]) / r["dC_dt_scale"])
            worst["dH"] = max(worst["dH"], abs(r["dH_dt"]) / abs(hamiltonian(state, params, ops)))
            worst["dPE"] = max(worst["dPE"], abs(r["dPE_dt"]) / potential_enstrophy(state, params, ops))
        v = ops.scheme.q_variant
        report.add(grp, f"{name}: |dM/dt| / scale", worst["dM"], RATE_LINEAR_TOL)
        report.add(grp, f"{name}: |dC/dt| / scale", worst["dC"], RATE_LINEAR_TOL)
        report.add(grp, f"{name}: |dH/dt| / |H|", worst["dH"], RATE_QUADRATIC_TOL, gating=v in CONSERVES_ENERGY)
        report.add(grp, f"{name}: |dPE/dt| / PE", worst["dPE"], RATE_QUADRATIC_TOL,
                   gating=v in CONSERVES_ENSTROPHY)


def _cfl_dt(mesh, speed, cfl=0.3):
    return cfl * float(mesh.geometry.edge_length.min()) / speed


def check_geostrophic(report, mesh, rng, depth=10.0, g=9.81, f0=1.0, n_steps=50):
    grp = "geostrophic"
    params = PhysicsParams.uniform(mesh, g, f0)
    psi = Cochain(0, "twisted", 0.01 * rng.standard_normal(mesh.topology.n_cells))
    for name in available_presets(mesh):
        ops = build_operators(mesh, SchemeConfig.preset(name))
        state = geostrophic_state(mesh, params, ops, depth, psi)
        tend = linearized_tendencies(state, params, ops, depth)
        F = depth * ops.H1(state.u)
        scale = max(_max_abs(F.values), _max_abs(ops.D1.matrix.T @ F.values),
                    _max_abs(ops.Q(params.coriolis_point(ops) / depth, F).values))
        rel = max(_max_abs(tend.u.values), _max_abs(tend.h.values)) / scale
        report.add(grp, f"{name}: linear tendency / scale", rel, GEOSTROPHIC_TOL)
        dt = _cfl_dt(mesh, np.sqrt(g * depth))
        final = run(state, IntegratorConfig("rk4", dt), n_steps, linear_model(params, ops, depth)).final
        du = _max_abs(final.u.values - state.u.values) / _max_abs(state.u.values)
        dh = _max_abs(final.h.values - state.h.values) / _max_abs(state.h.values - state.h.values.mean())
        report.add(grp, f"{name}: {n_steps}-step drift", max(du, dh), GEOSTROPHIC_DRIFT_TOL)


def uniform_pv_run(mesh, scheme="trsk2010-te", n_steps=100, seed=0, cfl=0.3, g=1.0):
    """max |q - q0| after ``n_steps`` rk4 steps from the uniform-PV preset."""
    ops = build_operators(mesh, SchemeConfig.preset(scheme))
    physics = PhysicsParams.uniform(mesh, g)
    state, physics = initial_condition("uniform-pv", {"seed": seed}, mesh, physics, ops)
    q0 = 1.0
    speed = np.sqrt(g) + float(np.max(np.abs(state.u.values) / mesh.geometry.edge_length))
    dt = _cfl_dt(mesh, speed, cfl)
    final = run(state, IntegratorConfig("rk4", dt), n_steps, nonlinear_model(physics, ops)).final
    return float(np.max(np.abs(diagnose_pv(final, physics, ops).values - q0)))


def check_uniform_pv(report, mesh, seed):
    report.add("uniform PV", "trsk2010-te: 100 rk4 steps, max|q - q0|", uniform_pv_run(mesh, seed=seed),
               UNIFORM_PV_TOL)


def verify_mesh(mesh, seed=0, label=None) -> VerifyReport:
    report = VerifyReport(label or mesh.label)
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    check_dec_ops(report, mesh, rng)
    check_wedges(report, mesh, rng)
    check_rates(report, mesh, rng)
    check_geostrophic(report, mesh, rng)
    check_uniform_pv(report, mesh, seed)
    report.seconds = time.perf_counter() - start
    return report


def verify(mesh_specs=DEFAULT_MESHES, seed=0):
    """One report per mesh spec, in the order given."""
    return [verify_mesh(build_mesh(spec), seed, spec) for spec in mesh_specs]
