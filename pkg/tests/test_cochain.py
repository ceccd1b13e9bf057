import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dectrisk.cochain import (AnalyticField, Cochain, constant, export_cochain, read_cochain_values,
                              reduce_scalar, reduce_vector, reinterpret_flavor, scale_dofs,
                              topological_pairing, unscale_dofs)
from dectrisk.errors import PairingTypeError, UnsupportedScaling, WrongDegree
from dectrisk.mesh import build_periodic_quad, build_periodic_trihex

Q3 = build_periodic_quad(3, 1.0)


def _x_edges(mesh):
    d = mesh.geometry.edge_points[:, 1] - mesh.geometry.edge_points[:, 0]
    return np.abs(d[:, 1]) < 1e-12


def test_reduce_constant_point_values():
    c = reduce_scalar(AnalyticField.scalar(lambda x, y: 2.5), 0, "straight", Q3)
    np.testing.assert_array_equal(c.values, 2.5)


def test_reduce_unit_field_gives_cell_areas():
    c = reduce_scalar(AnalyticField.scalar(lambda x, y: 1.0), 2, "straight", Q3)
    np.testing.assert_allclose(c.values, 1.0, atol=1e-14)
    m = build_periodic_trihex(4, 0.3)
    c = reduce_scalar(AnalyticField.scalar(lambda x, y: 1.0), 2, "twisted", m)
    np.testing.assert_allclose(c.values, m.geometry.tcell_area, rtol=1e-13)


@pytest.mark.parametrize("n", [3, 5, 8])
def test_periodic_integral_sums_to_zero(n):
    m = build_periodic_quad(n, 1.0 / n)
    c = reduce_scalar(AnalyticField.scalar(lambda x, y: np.sin(2 * np.pi * x)), 2, "straight", m)
    assert abs(c.values.sum()) < 1e-14


def test_uniform_x_field_circulation_and_flux():
    X = AnalyticField.vector_field(lambda x, y: (1.0, 0.0))
    xe = _x_edges(Q3)
    circ = reduce_vector(X, "circulation", "straight", Q3)
    np.testing.assert_allclose(circ.values[xe], 1.0)
    np.testing.assert_allclose(circ.values[~xe], 0.0, atol=1e-15)
    flux = reduce_vector(X, "flux", "straight", Q3)
    np.testing.assert_allclose(flux.values[xe], 0.0, atol=1e-15)
    # y edges point up, so their clockwise normal is +x
    np.testing.assert_allclose(flux.values[~xe], 1.0)


def test_zero_field_reduces_to_zero():
    X = AnalyticField.vector_field(lambda x, y: (0.0, 0.0))
    assert not reduce_vector(X, "flux", "twisted", Q3).values.any()


def test_reduce_scalar_rejects_edges():
    with pytest.raises(WrongDegree):
        reduce_scalar(AnalyticField.scalar(lambda x, y: x), 1, "straight", Q3)


def test_scale_dofs_height_and_velocity():
    m = build_periodic_quad(3, 0.5)
    h = scale_dofs(m, np.full(9, 2.0), 2, "twisted")
    np.testing.assert_allclose(h.values, 0.5)
    u = scale_dofs(Q3, np.ones(18), 1, "straight")
    assert u.flavor == "circulation"
    np.testing.assert_array_equal(u.values, 1.0)
    with pytest.raises(UnsupportedScaling):
        scale_dofs(Q3, np.ones(9), 0, "straight")


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=18, max_size=18))
def test_scale_round_trip(vals):
    m = build_periodic_quad(3, 0.7)
    back = unscale_dofs(m, scale_dofs(m, vals, 1, "straight"))
    np.testing.assert_allclose(back, vals, rtol=1e-14, atol=1e-300)


def test_pairing_signs_on_quad2():
    m = build_periodic_quad(2, 1.0)
    ones_s = constant(m, 1.0, 1, "straight", "circulation")
    ones_t = constant(m, 1.0, 1, "twisted", "flux")
    assert topological_pairing(ones_s, ones_t) == 8.0
    ones_tc = constant(m, 1.0, 1, "twisted", "circulation")
    ones_sf = constant(m, 1.0, 1, "straight", "flux")
    assert topological_pairing(ones_tc, ones_sf) == -8.0


def test_pairing_even_degree_is_symmetric():
    rng = np.random.default_rng(0)
    x = Cochain(0, "straight", rng.standard_normal(9))
    y = Cochain(2, "twisted", rng.standard_normal(9))
    assert topological_pairing(x, y) == topological_pairing(y, x)


def test_pairing_type_mismatch():
    with pytest.raises(PairingTypeError):
        topological_pairing(constant(Q3, 1, 1, "straight", "circulation"),
                            constant(Q3, 1, 1, "twisted", "circulation"))


def test_reinterpret_flavor():
    c = constant(Q3, 1.0, 1, "straight", "circulation")
    f = reinterpret_flavor(c)
    assert f.flavor == "flux" and np.array_equal(f.values, c.values)
    assert reinterpret_flavor(f).type == c.type
    rng = np.random.default_rng(1)
    r = Cochain(1, "twisted", rng.standard_normal(18), "flux")
    assert reinterpret_flavor(r).values.tobytes() == r.values.tobytes()
    with pytest.raises(WrongDegree):
        reinterpret_flavor(constant(Q3, 1.0, 0, "straight"))


def test_cochain_arithmetic_type_checks():
    a = constant(Q3, 1.0, 2, "twisted")
    with pytest.raises(TypeError):
        a + constant(Q3, 1.0, 2, "straight")
    np.testing.assert_array_equal((2 * a - a).values, 1.0)


def test_export_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    c = Cochain(2, "twisted", rng.standard_normal(9))
    export_cochain(Q3, c, tmp_path / "h.txt", "height")
    np.testing.assert_array_equal(read_cochain_values(tmp_path / "h.txt"), c.values)
