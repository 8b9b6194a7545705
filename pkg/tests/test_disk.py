import numpy as np
import pytest

from plateau_h3.disk import DiskGrid
from plateau_h3.errors import ParameterError


@pytest.fixture(scope="module")
def g():
    return DiskGrid(48, 12)


def xy(g):
    R, T = np.meshgrid(g.radii, g.theta, indexing="ij")
    return R * np.cos(T), R * np.sin(T)


@pytest.mark.parametrize("n_theta", [100, 45, 3, 12.0])
def test_bad_n_theta(n_theta):
    with pytest.raises(ParameterError, match="three-point"):
        DiskGrid(n_theta, 12)


def test_bad_n_r():
    with pytest.raises(ParameterError):
        DiskGrid(48, 3)


@pytest.mark.parametrize("n_theta, n_r", [(24, 8), (48, 12), (96, 16), (192, 32)])
def test_grid_invariants(n_theta, n_r):
    g = DiskGrid(n_theta, n_r)
    assert np.all(np.diff(g.radii) > 0) and g.radii[-1] == 1.0 and g.radii[0] > 0
    assert 0.9 <= g.eval_radius_value < 1.0
    assert np.allclose(g.theta[:: n_theta // 3], 2 * np.pi * np.arange(3) / 3)


def test_polynomial_derivatives(g):
    x, y = xy(g)
    F = x**3 * y - 2 * x * y**2 + 0.5 * y
    # Exact Laplacian of the polynomial: 6xy − 4x.
    assert np.allclose(g.laplacian(F), 6 * x * y - 4 * x, atol=1e-10)
    r, th = g.r, g.theta
    assert np.allclose(g.dr(x * y), 2 * r * np.cos(th) * np.sin(th), atol=1e-12)
    assert np.allclose(g.dt(x), -y, atol=1e-13)
    assert np.allclose(g.dtt(x), -x, atol=1e-12)
    assert np.allclose(g.drr(x**2 + y**2), 2.0, atol=1e-10)


def test_complex_dt_matches_real(g):
    x, y = xy(g)
    F = np.cos(x) * np.exp(y)
    assert np.allclose(g.dt(F + 0j).real, g.dt(F), atol=1e-13)
    assert np.allclose(g.dtt(F + 0j).real, g.dtt(F), atol=1e-11)


def test_dense_operators_match(g):
    x, y = xy(g)
    F = np.exp(x) * np.sin(2 * y)
    ops = g.dense_operators
    f = F.ravel()
    assert np.allclose(ops["dr"] @ f, g.dr(F).ravel(), atol=1e-11)
    assert np.allclose(ops["dt"] @ f, g.dt(F).ravel(), atol=1e-11)
    assert np.allclose(ops["lap"] @ f, g.laplacian(F).ravel(), atol=1e-9)


def test_interpolation_and_center(g):
    x, y = xy(g)
    F = np.exp(x) * np.cos(y)
    rho = np.array([0.0, 0.13, 0.5, 0.77])
    th = g.theta
    X, Y = rho[:, None] * np.cos(th), rho[:, None] * np.sin(th)
    ref = np.exp(X) * np.cos(Y)
    assert np.allclose(g.interpolate_radius(F, rho), ref, atol=1e-12)
    assert g.center_value(F) == pytest.approx(1.0, abs=1e-12)
    # A radial derivative flips sign through the center.
    Fr = g.dr(F)
    ref_r = np.exp(X) * (np.cos(Y) * np.cos(th) - np.sin(Y) * np.sin(th))
    assert np.allclose(g.interpolate_radius(Fr, rho, parity=-1), ref_r, atol=1e-10)
    assert np.allclose(g.interpolate_radius(F, g.radii), F, atol=1e-14)


def test_integrals(g):
    # ∫_0^c r³ dr = c⁴/4 (odd in r).
    assert g.radial_integral(g.radii**3, 0.5, parity=-1) == pytest.approx(0.5**4 / 4, rel=1e-12)
    assert g.radial_integral(g.radii**2, 0.7, parity=1) == pytest.approx(0.7**3 / 3, rel=1e-12)
    assert g.theta_integral(np.cos(g.theta) ** 2) == pytest.approx(np.pi, rel=1e-14)


def test_stencil_is_second_order():
    errs = []
    for n_theta, n_r in ((48, 16), (96, 32)):
        g = DiskGrid(n_theta, n_r)
        x, y = xy(g)
        F = np.exp(0.5 * x) * np.sin(y)
        lap = (g.stencil_operators["lap"] @ F.ravel()).reshape(F.shape)
        exact = 0.25 * np.exp(0.5 * x) * np.sin(y) - np.exp(0.5 * x) * np.sin(y)
        errs.append(np.abs(lap - exact)[1:-1].max())
    assert errs[1] < errs[0] / 2
