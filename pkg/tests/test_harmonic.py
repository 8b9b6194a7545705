import numpy as np
import pytest

from plateau_h3.ball import random_isometry, truncate_in_frame
from plateau_h3.curves import equator, eval_curve, great_circle, latitude, rotation_x, wavy
from plateau_h3.disk import DiskGrid
from plateau_h3.errors import ParameterError
from plateau_h3.harmonic import (
    DiskMap,
    exact_geodesic_disk,
    flat_disk,
    harmonic_extend,
    newton_harmonic,
    tension_field,
    tension_residual,
)

EPS = 1e-2


@pytest.mark.parametrize("n_theta, n_r", [(24, 6), (48, 12), (96, 16)])
def test_equator_recovers_flat_disk(n_theta, n_r):
    g = DiskGrid(n_theta, n_r)
    disk, rep = harmonic_extend(eval_curve(equator(), g.theta), g, EPS)
    assert rep.converged and rep.sup_residual < 1e-8
    assert np.abs(disk.values - flat_disk(g, 1 - EPS)).max() < 1e-6
    assert np.abs(disk.values[..., 2]).max() < 1e-8


def test_boundary_row_radius(grid):
    disk, _ = harmonic_extend(eval_curve(wavy(0.3, 3), grid.theta), grid, EPS)
    assert np.allclose(np.linalg.norm(disk.boundary_row, axis=-1), 1 - EPS, atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_isometry_equivariance(grid, seed):
    gmap = random_isometry(np.random.default_rng(seed), 0.4)
    b = eval_curve(equator(), grid.theta)
    disk, rep = harmonic_extend(gmap(b), grid, EPS, frame=gmap)
    assert rep.converged
    ref = exact_geodesic_disk(gmap, grid, EPS)
    assert np.abs(disk.values - ref.values).max() < 5e-6


def test_constant_boundary(grid):
    b = np.tile([0.0, 0.0, 1.0], (grid.n_theta, 1))
    disk, rep = harmonic_extend(b, grid, EPS)
    assert np.array_equal(disk.values, np.broadcast_to([0, 0, 1 - EPS], disk.values.shape))
    # Zero up to the row-sum round-off of the differentiation matrices.
    assert rep.sup_residual < grid.roundoff_floor


@pytest.mark.parametrize("n_theta, n_r", [(24, 6), (48, 12), (96, 16)])
def test_exact_flat_disk_residual_at_roundoff(n_theta, n_r):
    g = DiskGrid(n_theta, n_r)
    rep = tension_residual(DiskMap(flat_disk(g, 1 - EPS), EPS), g)
    assert rep.sup_residual < 50 * g.roundoff_floor


def test_non_harmonic_polynomial_map(grid):
    R, T = np.meshgrid(grid.radii, grid.theta, indexing="ij")
    x, y = R * np.cos(T), R * np.sin(T)
    vals = 0.5 * np.stack([x, y, x**2 - 0.5 * y**2], -1)
    assert tension_residual(DiskMap(vals, EPS), grid).sup_residual > 1e-2


def test_output_meets_tolerance(grid):
    for tol in (1e-6, 1e-9):
        disk, rep = harmonic_extend(eval_curve(wavy(0.5, 2), grid.theta), grid, EPS, tol=tol)
        assert tension_residual(disk, grid).sup_residual <= tol
        assert rep.converged


def test_tension_matches_closed_form_on_radial_map(grid):
    # φ = f(r)(cos θ, sin θ, 0) with f = c r³ (a polynomial map): tension x-component is
    # (f'' + f'/r − f/r²) + 2f(f'² − f²/r²)/(1 − f²); check against it.
    c = 0.6
    R, T = np.meshgrid(grid.radii, grid.theta, indexing="ij")
    f, fp, fpp = c * R**3, 3 * c * R**2, 6 * c * R
    phi = np.stack([f * np.cos(T), f * np.sin(T), 0 * R])
    rad = fpp + fp / R - f / R**2 + 2 * f * (fp**2 - f**2 / R**2) / (1 - f**2)
    tau = tension_field(grid, phi)
    assert np.allclose(tau[0], rad * np.cos(T), atol=1e-10)
    assert np.allclose(tau[2], 0.0, atol=1e-12)


def test_exact_geodesic_disks(grid):
    assert np.array_equal(exact_geodesic_disk(equator(), grid, EPS).values, flat_disk(grid, 1 - EPS))
    tilted = exact_geodesic_disk(great_circle(np.pi / 2), grid, EPS)
    assert np.allclose(tilted.values, flat_disk(grid, 1 - EPS) @ rotation_x(np.pi / 2).T)
    lat = exact_geodesic_disk(latitude(0.4), grid, EPS)
    # Boundary row is the truncated latitude circle.
    assert np.allclose(lat.boundary_row, truncate_in_frame(eval_curve(latitude(0.4), grid.theta), EPS), atol=1e-12)
    flat_res = tension_residual(DiskMap(flat_disk(grid, 1 - EPS), EPS), grid).sup_residual
    lat_res = tension_residual(lat, grid).sup_residual
    # Both sit at round-off; the comparison is against the grid's floor.
    assert max(flat_res, lat_res) < 50 * grid.roundoff_floor
    with pytest.raises(ParameterError):
        exact_geodesic_disk({"type": "wavy", "amplitude": 0.1, "frequency": 2}, grid)


def test_latitude_solve_matches_exact(grid):
    disk, rep = harmonic_extend(eval_curve(latitude(0.4), grid.theta), grid, EPS)
    assert np.abs(disk.values - exact_geodesic_disk(latitude(0.4), grid, EPS).values).max() < 1e-6


def test_uniqueness_from_random_starts(grid, rng):
    dirichlet = truncate_in_frame(eval_curve(wavy(0.3, 3), grid.theta), EPS).T
    tol = 1e-9
    sols = []
    for _ in range(2):
        # Smooth random interior start: the radial guess plus r(1 − r)·(random affine field).
        R, T = np.meshgrid(grid.radii, grid.theta, indexing="ij")
        x, y = R * np.cos(T), R * np.sin(T)
        c = rng.uniform(-0.3, 0.3, (3, 3))
        bump = (1 - R) * (c[:, :1, None] + c[:, 1:2, None] * x + c[:, 2:, None] * y)
        init = R * dirichlet[:, None, :] + bump
        phi, rep, _ = newton_harmonic(grid, dirichlet, init, tol)
        assert rep.converged
        sols.append(phi)
    assert np.abs(sols[0] - sols[1]).max() < 10 * tol


@pytest.mark.parametrize("curve", [equator(), wavy(0.3, 3), wavy(0.5, 4)], ids=["equator", "wavy03_3", "wavy05_4"])
def test_maximum_principle(grid, curve):
    disk, _ = harmonic_extend(eval_curve(curve, grid.theta), grid, EPS)
    assert np.linalg.norm(disk.values, axis=-1).max() <= 1 - EPS + 1e-12


def test_grid_convergence_wavy():
    rho = np.array([0.3, 0.6, 0.9])
    samples = []
    for nt, nr in ((24, 6), (48, 8), (96, 12)):
        g = DiskGrid(nt, nr)
        disk, _ = harmonic_extend(eval_curve(wavy(0.3, 3), g.theta), g, EPS, tol=1e-10)
        samples.append(g.interpolate_radius(disk.components, rho)[..., :: nt // 24])
    d1 = np.abs(samples[0] - samples[1]).max()
    d2 = np.abs(samples[1] - samples[2]).max()
    assert d2 < d1 / 3


@pytest.mark.parametrize("eps", [0.0, 1e-5, 0.3])
def test_eps_range(grid, eps):
    with pytest.raises(ParameterError):
        harmonic_extend(eval_curve(equator(), grid.theta), grid, eps)


def test_boundary_shape_checked(grid):
    with pytest.raises(ParameterError):
        harmonic_extend(np.zeros((10, 3)), grid)


@pytest.mark.parametrize("solver", ["dense", "krylov"])
def test_linear_solvers_agree(solver):
    g = DiskGrid(48, 12)
    disk, rep = harmonic_extend(eval_curve(wavy(0.3, 3), g.theta), g, EPS, tol=1e-10, linear_solver=solver)
    ref, _ = harmonic_extend(eval_curve(wavy(0.3, 3), g.theta), g, EPS, tol=1e-10, linear_solver="dense")
    assert rep.converged
    assert np.abs(disk.values - ref.values).max() < 1e-9
