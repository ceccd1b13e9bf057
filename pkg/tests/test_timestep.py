import numpy as np
import pytest

from dectrisk.errors import IntegratorDivergence, PVSingularity, SimulationError
from dectrisk.harness.initial import initial_condition
from dectrisk.mesh import build_periodic_quad, build_periodic_trihex
from dectrisk.swe_core import (PhysicsParams, SchemeConfig, Tendency, build_operators, diagnose_pv,
                               nonlinear_model, rest_state)
from dectrisk.timestep import IntegratorConfig, implicit_midpoint_step, rk4_step, run

Q8 = build_periodic_quad(8, 1.0)
TRI = build_periodic_trihex(4, 1.0)
TE = SchemeConfig.preset("trsk2010-te")


def _decay(rate):
    return lambda s: Tendency(-rate * s.h, -rate * s.u)


def _hill(mesh):
    ops = build_operators(mesh, TE)
    phys = PhysicsParams.uniform(mesh, 9.81, 1.0)
    state, phys = initial_condition("gaussian-hill", {}, mesh, phys, ops)
    return state, nonlinear_model(phys, ops)


def test_zero_model_is_identity():
    s = rest_state(TRI, 1.0)
    zero = lambda st: Tendency(0 * st.h, 0 * st.u)  # noqa: E731
    for integrator in (IntegratorConfig("rk4", 0.1), IntegratorConfig("implicit-midpoint", 0.1)):
        out = run(s, integrator, 3, zero).final
        np.testing.assert_array_equal(out.vector(), s.vector())
        assert out.time == pytest.approx(0.3)


def test_rk4_matches_exponential_to_fifth_order():
    s = rest_state(Q8, 1.0)
    out = rk4_step(s, _decay(1.0), 0.1)
    np.testing.assert_allclose(out.h.values, np.exp(-0.1) * s.h.values, rtol=1e-6)


def test_implicit_midpoint_matches_cayley():
    s = rest_state(Q8, 1.0)
    out = implicit_midpoint_step(s, _decay(1.0), 0.1)
    np.testing.assert_allclose(out.h.values, (1 - 0.05) / (1 + 0.05) * s.h.values, rtol=1e-13)


@pytest.mark.parametrize("kind", ["rk4", "implicit-midpoint"])
def test_mass_conserved_to_roundoff(kind):
    state, model = _hill(TRI)
    out = run(state, IntegratorConfig(kind, 0.01), 10, model).final
    assert abs(out.h.values.sum() - state.h.values.sum()) <= 1e-13 * state.h.values.sum()


def test_zero_steps_returns_initial():
    state, model = _hill(Q8)
    calls = []
    res = run(state, IntegratorConfig(), 0, model, [lambda i, s: calls.append(i)])
    assert res.final is state and calls == [0]


def test_runs_are_deterministic():
    state, model = _hill(TRI)
    a = run(state, IntegratorConfig("rk4", 0.01), 5, model).final.vector()
    b = run(state, IntegratorConfig("rk4", 0.01), 5, model).final.vector()
    assert a.tobytes() == b.tobytes()


def test_callback_cadence():
    state, model = _hill(Q8)
    seen = []
    run(state, IntegratorConfig("rk4", 0.01), 7, model, [lambda i, s: seen.append(i)], cadence=3)
    assert seen == [0, 3, 6]


def test_implicit_midpoint_divergence():
    s = rest_state(Q8, 1.0)
    with pytest.raises(IntegratorDivergence) as info:
        implicit_midpoint_step(s, _decay(100.0), 1.0, max_iterations=20)
    assert len(info.value.history) == 20


def test_simulation_error_carries_step():
    s = rest_state(Q8, 1.0)
    calls = {"n": 0}

    def model(st):
        calls["n"] += 1
        if calls["n"] > 8:
            raise PVSingularity(np.array([0]))
        return _decay(0.0)(st)

    with pytest.raises(SimulationError) as info:
        run(s, IntegratorConfig("rk4", 0.1), 5, model)
    assert info.value.step == 3


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig("euler")
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.0)
    with pytest.raises(ValueError):
        run(rest_state(Q8, 1.0), IntegratorConfig(), -1, _decay(0.0))


def test_uniform_pv_stays_uniform():
    ops = build_operators(Q8, TE)
    state, phys = initial_condition("uniform-pv", {}, Q8, PhysicsParams.uniform(Q8, 1.0), ops)
    out = run(state, IntegratorConfig("rk4", 0.2), 100, nonlinear_model(phys, ops)).final
    assert np.max(np.abs(diagnose_pv(out, phys, ops).values - 1.0)) <= 1e-11
