import numpy as np
import pytest

from dectrisk.dbl import dbl_residuals, dbl_supported, dbl_tensor
from dectrisk.errors import UnsupportedVariant
from dectrisk.mesh import build_periodic_quad, build_periodic_trihex
from dectrisk.wedge import (build_pv_operators, build_R, build_W_from_R, enstrophy_rule_residual,
                            full_leibniz_residual, pairing_antisymmetry_residual)


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_dbl_residuals_vanish(n):
    mesh = build_periodic_quad(n, 1.0)
    R = build_R(mesh, "metric")
    W = build_W_from_R(mesh, R)
    res = dbl_residuals(mesh, R, W, dbl_tensor(mesh, R, W))
    assert max(res.values()) <= 1e-13, res


def test_dbl_independent_of_spacing():
    a = build_pv_operators(build_periodic_quad(4, 1.0), "metric", "DBL").Q
    b = build_pv_operators(build_periodic_quad(4, 0.25), "metric", "DBL").Q
    np.testing.assert_array_equal(a.coef, b.coef)


def test_dbl_unsupported_on_trihex():
    mesh = build_periodic_trihex(4, 1.0)
    R = build_R(mesh, "metric")
    assert not dbl_supported(mesh, R)
    with pytest.raises(UnsupportedVariant):
        dbl_tensor(mesh, R, build_W_from_R(mesh, R))


def test_dbl_conserves_both_structures():
    mesh = build_periodic_quad(6, 1.0)
    pv = build_pv_operators(mesh, "combinatorial", "DBL")
    rng = np.random.default_rng(0)
    for _ in range(10):
        x, y = rng.standard_normal((2, mesh.topology.n_cells))
        assert pairing_antisymmetry_residual(pv.Q, x) <= 1e-13
        assert enstrophy_rule_residual(mesh, pv, x) <= 1e-13
        assert full_leibniz_residual(mesh, pv, x, y) <= 1e-12
