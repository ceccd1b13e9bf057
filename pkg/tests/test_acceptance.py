"""Acceptance suite: one PASS/FAIL line per criterion at its stated tolerance and time budget."""
import time

import numpy as np
import pytest

from dectrisk.cochain import Cochain
from dectrisk.dec_ops import build_d
from dectrisk.harness.convergence import convergence_study
from dectrisk.harness.initial import initial_condition
from dectrisk.harness.verify import (VerifyReport, available_presets, available_variants, check_dec_ops,
                                     check_geostrophic, random_physics, random_state, uniform_pv_run)
from dectrisk.mesh import build_mesh
from dectrisk.swe_core import (PhysicsParams, SchemeConfig, build_operators, hamiltonian, height_point,
                               invariant_rates, nonlinear_model, potential_enstrophy, tendencies)
from dectrisk.timestep import IntegratorConfig, run
from dectrisk.wedge import (build_pv_operators, enstrophy_rule_residual, full_leibniz_residual,
                            massflux_adjoint, pairing_antisymmetry_residual)

MESH_SPECS = ("quad:8:1.0", "quad:9:0.5", "trihex:4:1.0")
MESHES = {spec: build_mesh(spec) for spec in MESH_SPECS}


class Criterion:
    """Times a block and formats the verdict against a tolerance and a runtime budget."""

    def __init__(self, emit, label, budget):
        self.emit, self.label, self.budget = emit, label, budget

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start

    def verdict(self, value, tol, ok=None, relation="<="):
        if ok is None:
            ok = bool(np.isfinite(value) and value <= tol)
        ok = ok and self.seconds < self.budget
        self.emit(f"{'PASS' if ok else 'FAIL'} criterion {self.label}: {value:.3e} {relation} {tol:g} "
                  f"({self.seconds:.2f} s, budget {self.budget:g} s)")
        return ok


def _max_abs(a):
    a = np.asarray(a.todense() if hasattr(a, "todense") else a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def test_criterion_1_operator_identities(acceptance_line):
    with Criterion(acceptance_line, "1 operator identities", 1.0) as c:
        worst = 0.0
        for spec, mesh in MESHES.items():
            report = VerifyReport(spec)
            check_dec_ops(report, mesh, np.random.default_rng(0))
            worst = max([worst] + [i.value for i in report.items])
    assert c.verdict(worst, 1e-13)


def test_criterion_2_wedge_identities(acceptance_line):
    with Criterion(acceptance_line, "2 wedge identities", 5.0) as c:
        worst = 0.0
        rng = np.random.default_rng(1)
        for mesh in MESHES.values():
            t = mesh.topology
            D2 = build_d(mesh, 2, "straight").matrix
            Db1 = build_d(mesh, 1, "twisted").matrix
            Db2 = build_d(mesh, 2, "twisted").matrix
            D1 = build_d(mesh, 1, "straight").matrix
            qs = rng.standard_normal((100, t.n_cells))
            for v in available_variants(mesh):
                pv = build_pv_operators(mesh, "metric", v)
                W, R = pv.W.matrix, pv.R.matrix
                worst = max(worst, _max_abs(W + W.T), _max_abs(R @ Db2 - D2 @ W), _max_abs(W @ Db1 - D1 @ R.T),
                            _max_abs(pv.Q.matrix(np.ones(t.n_cells), t.n_edges) - W))
                if v in ("TE", "DBL"):
                    worst = max([worst] + [pairing_antisymmetry_residual(pv.Q, q) for q in qs])
                if v in ("PE", "DBL"):
                    worst = max([worst] + [enstrophy_rule_residual(mesh, pv, q) for q in qs])
    assert c.verdict(worst, 1e-13)


def _rates(mesh, presets, n_states=100, seed=2):
    rng = np.random.default_rng(seed)
    states = [(random_state(mesh, rng), random_physics(mesh, rng)) for _ in range(n_states)]
    out = {}
    for name in presets:
        ops = build_operators(mesh, SchemeConfig.preset(name))
        rows = []
        for s, p in states:
            r = invariant_rates(s, tendencies(s, p, ops), p, ops)
            rows.append((abs(r["dM_dt"]) / r["dM_dt_scale"], abs(r["dC_dt"]) / r["dC_dt_scale"],
                         abs(r["dH_dt"]) / abs(hamiltonian(s, p, ops)),
                         abs(r["dPE_dt"]) / potential_enstrophy(s, p, ops)))
        out[name] = np.max(rows, axis=0)
    return out


@pytest.fixture(scope="module")
def casimir_rates():
    start = time.perf_counter()
    rates = {spec: _rates(mesh, available_presets(mesh)) for spec, mesh in MESHES.items()}
    return rates, time.perf_counter() - start


def _rate_verdict(emit, casimir_rates, label, column, presets, tol):
    rates, seconds = casimir_rates
    with Criterion(emit, label, 10.0) as c:
        pass
    c.seconds = seconds
    worst = max(r[name][column] for r in rates.values() for name in presets if name in r)
    return c.verdict(worst, tol)


def test_criterion_3_mass_and_circulation(acceptance_line, casimir_rates):
    ok_m = _rate_verdict(acceptance_line, casimir_rates, "3 |dM/dt| / scale, all schemes", 0,
                         ("al81", "trsk2010-te", "trsk2010-pe", "eldred-dbl", "accur"), 1e-14)
    ok_c = _rate_verdict(acceptance_line, casimir_rates, "3 |dC/dt| / scale, all schemes", 1,
                         ("al81", "trsk2010-te", "trsk2010-pe", "eldred-dbl", "accur"), 1e-14)
    assert ok_m and ok_c


def test_criterion_3_energy_te_dbl(acceptance_line, casimir_rates):
    assert _rate_verdict(acceptance_line, casimir_rates, "3 |dH/dt| / |H|, TE and DBL", 2,
                         ("trsk2010-te", "eldred-dbl", "al81"), 1e-12)


def test_criterion_3_enstrophy_dbl(acceptance_line, casimir_rates):
    assert _rate_verdict(acceptance_line, casimir_rates, "3 |dPE/dt| / PE, DBL", 3,
                         ("eldred-dbl", "al81"), 1e-12)


def test_criterion_3_enstrophy_pe(acceptance_line, casimir_rates):
    # Q^PE satisfies the enstrophy Leibniz rule but is not antisymmetric, so the
    # nonlinear PV flux does not conserve potential enstrophy in the full bracket
    assert _rate_verdict(acceptance_line, casimir_rates, "3 |dPE/dt| / PE, PE", 3, ("trsk2010-pe",), 1e-12)


def test_criterion_4_uniform_pv(acceptance_line):
    with Criterion(acceptance_line, "4 uniform PV after 100 rk4 steps", 5.0) as c:
        err = uniform_pv_run(MESHES["quad:8:1.0"], "trsk2010-te", n_steps=100, cfl=0.3)
    assert c.verdict(err, 1e-11)


def test_criterion_5_geostrophic_mode(acceptance_line):
    with Criterion(acceptance_line, "5 geostrophic mode", 5.0) as c:
        report = VerifyReport("geostrophic")
        for spec in ("quad:8:1.0", "trihex:4:1.0"):
            check_geostrophic(report, MESHES[spec], np.random.default_rng(5))
    tend = max(i.value for i in report.items if "tendency" in i.name)
    drift = max(i.value for i in report.items if "drift" in i.name)
    ok_t = c.verdict(tend, 1e-12)
    c.label = "5 geostrophic 50-step drift"
    ok_d = c.verdict(drift, 1e-10)
    assert ok_t and ok_d


VORTEX_HORIZON = 1.0


def _vortex_energy_drift(integrator):
    mesh = build_mesh("quad:16:0.0625")
    ops = build_operators(mesh, SchemeConfig.preset("trsk2010-te"))
    state, physics = initial_condition("vortex-pair", {}, mesh, PhysicsParams.uniform(mesh, 100.0), ops)
    n = int(round(VORTEX_HORIZON / integrator.dt))
    final = run(state, integrator, n, nonlinear_model(physics, ops)).final
    h0 = hamiltonian(state, physics, ops)
    return abs(hamiltonian(final, physics, ops) - h0) / abs(h0)


def test_criterion_6_rk4_energy_drift_order(acceptance_line):
    with Criterion(acceptance_line, "6 rk4 energy drift order (|order - 4|)", 60.0) as c:
        dts = np.array([0.004, 0.002, 0.001])
        drifts = np.array([_vortex_energy_drift(IntegratorConfig("rk4", dt)) for dt in dts])
        order = np.polyfit(np.log(dts), np.log(drifts), 1)[0]
    acceptance_line(f"     drifts {', '.join(f'{d:.3e}' for d in drifts)} at dt {', '.join(map(str, dts))}; "
                    f"observed order {order:.2f}")
    assert c.verdict(abs(order - 4.0), 0.5)


def test_criterion_6_implicit_midpoint_energy(acceptance_line):
    with Criterion(acceptance_line, "6 implicit midpoint energy drift", 60.0) as c:
        drift = _vortex_energy_drift(IntegratorConfig("implicit-midpoint", 0.002, tolerance=1e-13))
    assert c.verdict(drift, 1e-10)


def test_criterion_7_convergence(acceptance_line):
    with Criterion(acceptance_line, "7 quad order 2 +- 0.2 (max |order - 2|)", 30.0) as c:
        quad, tri = [], []
        for op in ("divergence", "curl", "gradient"):
            quad += list(convergence_study(op, "quad", [8, 16, 32]).orders_l2)
            tri += list(convergence_study(op, "trihex", [8, 16, 32]).orders_l2)
        red = list(convergence_study("cell-reduction", "quad", [8, 16, 32]).orders_l2)
        red += list(convergence_study("edge-reduction", "trihex", [8, 16, 32]).orders_l2)
    ok_q = c.verdict(max(abs(o - 2.0) for o in quad), 0.2)
    c.label = "7 trihex order >= 1 (min order)"
    ok_t = c.verdict(min(tri), 1.0, ok=min(tri) >= 1.0, relation=">=")
    c.label = "7 reduction quadrature order >= 4 (min order)"
    ok_r = c.verdict(min(red), 4.0, ok=min(red) >= 4.0, relation=">=")
    assert ok_q and ok_t and ok_r


def test_criterion_8_mass_flux_branches(acceptance_line):
    with Criterion(acceptance_line, "8 mass-flux branches coincide", 1.0) as c:
        worst = 0.0
        rng = np.random.default_rng(8)
        for mesh in MESHES.values():
            for t_kind in ("metric", "combinatorial"):
                ops = build_operators(mesh, SchemeConfig("metric", "TE", t_kind))
                for _ in range(20):
                    s = random_state(mesh, rng)
                    h0 = height_point(s, ops)
                    a = massflux_adjoint(ops.T, h0, ops.H1(s.u)).values
                    b = ops.H1(massflux_adjoint(ops.T, h0, s.u)).values
                    worst = max(worst, _max_abs(a - b) / _max_abs(a))
    assert c.verdict(worst, 1e-13)


def _partial_rule_one(mesh, pv):
    """max |D2 Q(1, .) - R Dbar2| over matrix entries."""
    t = mesh.topology
    D2 = build_d(mesh, 2, "straight").matrix
    Db2 = build_d(mesh, 2, "twisted").matrix
    return _max_abs(D2 @ pv.Q.matrix(np.ones(t.n_cells), t.n_edges) - pv.R.matrix @ Db2)


def test_criterion_9_leibniz_chain(acceptance_line):
    with Criterion(acceptance_line, "9 DBL full Leibniz on uniform quad", 5.0) as c:
        rng = np.random.default_rng(9)
        mesh = MESHES["quad:8:1.0"]
        pv = build_pv_operators(mesh, "combinatorial", "DBL")
        pairs = rng.standard_normal((100, 2, mesh.topology.n_cells))
        full = max(full_leibniz_residual(mesh, pv, x, y) for x, y in pairs)
        rule1 = _partial_rule_one(mesh, pv)
        rule2 = max(enstrophy_rule_residual(mesh, pv, x) for x, _ in pairs)
        # the chain on every other mesh and variant: full rule implies both partial rules
        chain_ok = True
        diagnostics = []
        for spec, m in MESHES.items():
            qs = rng.standard_normal((20, 2, m.topology.n_cells))
            for v in available_variants(m):
                p = build_pv_operators(m, "metric", v)
                f = max(full_leibniz_residual(m, p, x, y) for x, y in qs)
                r1 = _partial_rule_one(m, p)
                r2 = max(enstrophy_rule_residual(m, p, x) for x, _ in qs)
                diagnostics.append(f"     {spec:12} Q^{v:5} full {f:.2e}  rule I {r1:.2e}  rule II {r2:.2e}")
                if f <= 1e-12:
                    chain_ok = chain_ok and r1 <= 1e-13 and r2 <= 1e-13
    ok_f = c.verdict(full, 1e-12)
    c.label = "9 DBL partial rule I (PV compatibility)"
    ok_1 = c.verdict(rule1, 1e-13)
    c.label = "9 DBL partial rule II (enstrophy)"
    ok_2 = c.verdict(rule2, 1e-13)
    c.label = "9 full rule implies both partial rules on all meshes"
    ok_c = c.verdict(0.0 if chain_ok else 1.0, 0.0, ok=chain_ok)
    for line in diagnostics:
        acceptance_line(line)
    assert ok_f and ok_1 and ok_2 and ok_c
