import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dectrisk.cochain import Cochain, reinterpret_flavor
from dectrisk.errors import PVSingularity, UnsupportedVariant
from dectrisk.harness.initial import geostrophic_state, initial_condition
from dectrisk.mesh import build_periodic_quad, build_periodic_trihex
from dectrisk.swe_core import (PRESETS, ModelState, PhysicsParams, SchemeConfig, build_operators,
                               diagnose_pv, diagnostics, functional_derivatives, hamiltonian,
                               height_point, invariant_rates, linearized_tendencies,
                               potential_enstrophy, rest_state, tendencies)
from dectrisk.wedge import massflux_adjoint

Q2 = build_periodic_quad(2, 1.0)
Q8 = build_periodic_quad(8, 1.0)
TRI = build_periodic_trihex(4, 1.0)
TE = SchemeConfig.preset("trsk2010-te")


def _x_velocity(mesh):
    d = mesh.geometry.edge_points[:, 1] - mesh.geometry.edge_points[:, 0]
    vals = np.where(np.abs(d[:, 1]) < 1e-12, d[:, 0], 0.0)
    return Cochain(1, "straight", vals, "circulation")


def _random_state(mesh, rng, depth=10.0):
    g = mesh.geometry
    u = Cochain(1, "straight", rng.standard_normal(mesh.topology.n_edges) * g.edge_length, "circulation")
    h = Cochain(2, "twisted", depth * (1 + 0.2 * rng.random(mesh.topology.n_vertices)) * g.tcell_area)
    return ModelState(u, h)


def test_energy_at_rest_quad2():
    ops = build_operators(Q2, TE)
    state = rest_state(Q2, 2.0)
    assert hamiltonian(state, PhysicsParams.uniform(Q2, 10.0), ops) == pytest.approx(80.0, rel=1e-14)


def test_energy_with_unit_velocity_quad2():
    ops = build_operators(Q2, TE)
    state = ModelState(_x_velocity(Q2), rest_state(Q2, 2.0).h)
    assert hamiltonian(state, PhysicsParams.uniform(Q2, 10.0), ops) == pytest.approx(84.0, rel=1e-14)


def test_derivatives_at_rest():
    ops = build_operators(Q8, TE)
    rng = np.random.default_rng(0)
    hs = Cochain(2, "twisted", 0.1 * rng.random(64))
    phys = PhysicsParams.uniform(Q8, 9.81, 1.0, hs)
    d = functional_derivatives(rest_state(Q8, 3.0), phys, ops)
    assert not d.F.values.any()
    np.testing.assert_allclose(d.B.values, 9.81 * (3.0 + hs.values), rtol=1e-14)


@pytest.mark.parametrize("t_kind", ["metric", "combinatorial"])
def test_mass_flux_branches_coincide(t_kind):
    ops = build_operators(TRI, SchemeConfig("metric", "TE", t_kind))
    state = _random_state(TRI, np.random.default_rng(1))
    h0 = height_point(state, ops)
    a = massflux_adjoint(ops.T, h0, ops.H1(state.u)).values
    b = ops.H1(massflux_adjoint(ops.T, h0, state.u)).values
    assert np.max(np.abs(a - b)) <= 1e-13 * np.max(np.abs(a))


def test_mass_flux_uniform_height():
    ops = build_operators(TRI, TE)
    state = ModelState(_random_state(TRI, np.random.default_rng(2)).u, rest_state(TRI, 4.0).h)
    F = functional_derivatives(state, PhysicsParams.uniform(TRI, 1.0), ops).F
    np.testing.assert_allclose(F.values, 4.0 * ops.H1(state.u).values, rtol=1e-13)


def test_pv_at_rest():
    ops = build_operators(TRI, TE)
    q = diagnose_pv(rest_state(TRI, 2.0), PhysicsParams.uniform(TRI, 1.0, 3.0), ops)
    np.testing.assert_allclose(q.values, 1.5, rtol=1e-13)


def test_pv_irrotational_flow_is_zero():
    ops = build_operators(Q8, TE)
    phi = Cochain(0, "straight", np.random.default_rng(3).standard_normal(64))
    state = ModelState(ops.D1(phi), rest_state(Q8, 1.0).h)
    assert np.max(np.abs(diagnose_pv(state, PhysicsParams.uniform(Q8, 1.0), ops).values)) <= 1e-14


def test_pv_halves_when_height_doubles():
    ops = build_operators(TRI, TE)
    phys = PhysicsParams.uniform(TRI, 1.0, 1.0)
    s = _random_state(TRI, np.random.default_rng(4))
    q1 = diagnose_pv(s, phys, ops).values
    q2 = diagnose_pv(ModelState(s.u, 2.0 * s.h), phys, ops).values
    np.testing.assert_allclose(q2, 0.5 * q1, rtol=1e-14)


def test_pv_singularity():
    ops = build_operators(Q8, TE)
    h = rest_state(Q8, 1.0).h.values.copy()
    h[:] = 0.0
    with pytest.raises(PVSingularity):
        diagnose_pv(ModelState(rest_state(Q8, 1.0).u, Cochain(2, "twisted", h)),
                    PhysicsParams.uniform(Q8, 1.0), ops)


@pytest.mark.parametrize("preset", sorted(PRESETS))
def test_rest_is_steady(preset):
    mesh = Q8 if preset in ("al81", "eldred-dbl") else TRI
    ops = build_operators(mesh, SchemeConfig.preset(preset))
    tend = tendencies(rest_state(mesh, 5.0), PhysicsParams.uniform(mesh, 9.81, 2.0), ops)
    assert np.max(np.abs(tend.u.values)) <= 1e-13
    assert np.max(np.abs(tend.h.values)) <= 1e-13


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["trsk2010-te", "trsk2010-pe", "accur"]))
def test_mass_and_circulation_rates(seed, preset):
    ops = build_operators(TRI, SchemeConfig.preset(preset))
    phys = PhysicsParams.uniform(TRI, 9.81, 1.0)
    s = _random_state(TRI, np.random.default_rng(seed))
    r = invariant_rates(s, tendencies(s, phys, ops), phys, ops)
    assert abs(r["dM_dt"]) <= 1e-14 * r["dM_dt_scale"] + 1e-300
    assert abs(r["dC_dt"]) <= 1e-14 * r["dC_dt_scale"] + 1e-300


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_te_energy_rate_vanishes(seed):
    ops = build_operators(TRI, TE)
    phys = PhysicsParams.uniform(TRI, 9.81, 1.0)
    s = _random_state(TRI, np.random.default_rng(seed))
    r = invariant_rates(s, tendencies(s, phys, ops), phys, ops)
    assert abs(r["dH_dt"]) <= 1e-12 * hamiltonian(s, phys, ops)


def test_dbl_conserves_energy_and_enstrophy():
    ops = build_operators(Q8, SchemeConfig.preset("eldred-dbl"))
    phys = PhysicsParams.uniform(Q8, 9.81, 1.0)
    rng = np.random.default_rng(5)
    for _ in range(5):
        s = _random_state(Q8, rng)
        r = invariant_rates(s, tendencies(s, phys, ops), phys, ops)
        assert abs(r["dH_dt"]) <= 1e-12 * hamiltonian(s, phys, ops)
        assert abs(r["dPE_dt"]) <= 1e-12 * potential_enstrophy(s, phys, ops)


def test_geostrophic_state_is_steady():
    for mesh in (Q8, TRI):
        ops = build_operators(mesh, TE)
        phys = PhysicsParams.uniform(mesh, 9.81, 1.0)
        psi = Cochain(0, "twisted", 0.01 * np.random.default_rng(6).standard_normal(mesh.topology.n_cells))
        s = geostrophic_state(mesh, phys, ops, 10.0, psi)
        tend = linearized_tendencies(s, phys, ops, 10.0)
        assert np.max(np.abs(tend.u.values)) <= 1e-12 * np.max(np.abs(s.u.values))
        assert np.max(np.abs(tend.h.values)) <= 1e-12


def test_diagnostics_values():
    ops = build_operators(Q2, TE)
    d = diagnostics(rest_state(Q2, 2.0), PhysicsParams.uniform(Q2, 10.0, 0.5), ops)
    assert d["mass"] == 8.0
    assert d["circulation"] == pytest.approx(0.5 * 4.0)
    assert d["min_h"] == d["max_h"] == 2.0
    assert d["max_u"] == 0.0


def test_uniform_pv_enstrophy():
    ops = build_operators(TRI, TE)
    s, phys = initial_condition("uniform-pv", {"q0": 2.0}, TRI, PhysicsParams.uniform(TRI, 1.0), ops)
    mass_on_cells = ops.R.op(s.h).values.sum()
    assert potential_enstrophy(s, phys, ops) == pytest.approx(0.5 * 4.0 * mass_on_cells, rel=1e-13)


def test_scheme_config_validation():
    with pytest.raises(UnsupportedVariant):
        SchemeConfig(q_variant="XX")
    with pytest.raises(ValueError):
        SchemeConfig(r_kind="exact")
    with pytest.raises(ValueError):
        SchemeConfig(hodge="galerkin")
    with pytest.raises(ValueError):
        SchemeConfig.preset("nope")
    assert SchemeConfig.preset("al81").q_variant == "DBL"


def test_physics_and_state_type_checks():
    with pytest.raises(ValueError):
        PhysicsParams.uniform(Q2, 0.0)
    s = rest_state(Q2, 1.0)
    with pytest.raises(TypeError):
        ModelState(reinterpret_flavor(s.u), s.h)
