import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq
from scipy.spatial.transform import Rotation

from plateau_h3.ball import BallIsometry, random_isometry
from plateau_h3.curves import (
    THREE_POINTS,
    BoundaryCurve,
    CurveFamily,
    Reparametrization,
    compose_boundary,
    corpus,
    curve_derivative,
    curve_from_function,
    curve_from_spec,
    curve_label,
    curve_sobolev_norm,
    curve_to_spec,
    equator,
    eval_curve,
    eval_reparam,
    great_circle,
    immersion_margin,
    latitude,
    periodic_sobolev_norm,
    simplicity_margin,
    three_point_project,
    transformed_curve,
    uniform_angles,
    wavy,
)
from plateau_h3.errors import DegeneracyError, ParameterError

TH = np.linspace(0, 2 * np.pi, 37)


def small_reparams(m=4, scale=0.15):
    coef = st.lists(st.floats(-1, 1), min_size=2 * m + 1, max_size=2 * m + 1)
    j = np.r_[1.0, np.repeat(np.arange(1, m + 1), 2)]
    return coef.map(lambda c: three_point_project(Reparametrization(scale * np.array(c) / j**2)))


def test_equator_values():
    p = eval_curve(equator(), TH)
    assert np.allclose(p, np.stack([np.cos(TH), np.sin(TH), 0 * TH], -1), atol=1e-15)
    assert np.allclose(curve_derivative(equator(), 0.0, 1), [0, 1, 0], atol=1e-14)
    assert np.allclose(curve_derivative(equator(), 0.0, 2), [-1, 0, 0], atol=1e-14)


def test_wavy_value_at_zero():
    ph = np.pi / 2 + 0.3
    assert np.allclose(eval_curve(wavy(0.3, 3), 0.0), [np.sin(ph), 0, np.cos(ph)], atol=1e-12)


@pytest.mark.parametrize("curve", corpus(), ids=lambda c: c.label)
def test_corpus_on_sphere_and_immersed(curve):
    assert np.allclose(np.linalg.norm(eval_curve(curve, TH), axis=-1), 1.0, atol=1e-12)
    assert immersion_margin(curve, 512) > 0.1
    assert simplicity_margin(curve, 128) > 0


def test_rotated_curve_is_rotated_evaluation(rng):
    g = BallIsometry(Rotation.random(random_state=rng).as_matrix())
    a = wavy(0.1, 2)
    assert np.allclose(eval_curve(transformed_curve(a, g), TH), g(eval_curve(a, TH)), atol=1e-12)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_derivative_vs_central_difference(order):
    a = wavy(0.3, 3)
    h = 1e-4
    plus = eval_curve(a, TH + h) if order == 1 else curve_derivative(a, TH + h, order - 1)
    minus = eval_curve(a, TH - h) if order == 1 else curve_derivative(a, TH - h, order - 1)
    fd = (plus - minus) / (2 * h)
    # h² truncation scales with the next derivative, which grows like k³.
    tol = 1e-8 if order == 1 else 1e-6
    assert np.abs(curve_derivative(a, TH, order) - fd).max() < tol * (1 + np.abs(fd).max())


def test_derivative_order_validated():
    with pytest.raises(ParameterError):
        curve_derivative(equator(), 0.0, 4)


def test_immersion_margin():
    assert immersion_margin(equator(), 256) == pytest.approx(1.0, abs=1e-12)
    # A cusp at θ = 0: raw derivative vanishes and is parallel to the point there.
    cusp = curve_from_function(
        lambda t: np.stack([np.ones_like(t), np.sin(t) - 0.5 * np.sin(2 * t), 0.3 * (1 - np.cos(2 * t))], -1),
        m=8,
    )
    assert immersion_margin(cusp, 64) <= 1e-8
    a = wavy(0.3, 3)
    assert immersion_margin(a, 4096) == pytest.approx(immersion_margin(a, 8192), abs=1e-6)
    with pytest.raises(ParameterError):
        immersion_margin(a, 16)


def test_reparam_identity_and_fixed_points():
    u = Reparametrization.identity(5)
    assert np.allclose(eval_reparam(u, TH), TH)
    v = three_point_project(Reparametrization(np.r_[0.05, 0.02, -0.03, 0.01, 0.04]))
    assert np.allclose(v(THREE_POINTS), THREE_POINTS, atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(u=small_reparams())
def test_reparam_bisection_inverse(u):
    for t in np.linspace(0.1, 6.0, 7):
        s = brentq(lambda x: u(x) - t, t - np.pi, t + np.pi, xtol=1e-14)
        assert abs(u(s) - t) < 1e-9


@settings(max_examples=25, deadline=None)
@given(u=small_reparams())
def test_reparam_monotone_degree_one(u):
    th = uniform_angles(4096)
    assert np.all(np.diff(u(th)) > 0)
    assert np.allclose(u(th + 2 * np.pi), u(th) + 2 * np.pi, atol=1e-12)
    assert u.min_derivative() == pytest.approx(u.derivative(th).min(), abs=1e-13)


def test_nonmonotone_rejected():
    with pytest.raises(DegeneracyError):
        Reparametrization(np.r_[0.0, 0.0, 1.5])


def test_compose_boundary():
    a = wavy(0.3, 3)
    assert np.array_equal(compose_boundary(a, Reparametrization.identity(4), 48), eval_curve(a, uniform_angles(48)))
    u = three_point_project(Reparametrization(np.r_[0, 0.03, -0.02, 0.01, 0.01]))
    b = compose_boundary(a, u, 48)
    assert np.allclose(b[::16], eval_curve(a, THREE_POINTS), atol=1e-14)
    # Oracle: trigonometric interpolation of densely resampled curve points.
    n = 2048
    F = np.fft.fft(eval_curve(a, uniform_angles(n)), axis=0) / n
    k = np.fft.fftfreq(n, 1.0 / n)
    ref = np.real(np.exp(1j * np.outer(u(uniform_angles(48)), k)) @ F)
    assert np.abs(b - ref).max() < 1e-9


def test_three_point_projection():
    u = Reparametrization.identity(4)
    assert np.array_equal(three_point_project(u).fourier_coeffs, u.fourier_coeffs)
    rot = three_point_project(Reparametrization(np.r_[0.1, np.zeros(8)]))
    assert rot.three_point_defect() < 1e-15
    v = three_point_project(Reparametrization(np.r_[0.02, 0.05, -0.01, 0.02, 0.0, 0.01, 0.0, 0.0, 0.01]))
    assert np.abs(three_point_project(v).fourier_coeffs - v.fourier_coeffs).max() < 1e-14


def test_sobolev_norms():
    c = np.zeros((3, 9), complex)
    c[0, 4] = 0.7
    assert curve_sobolev_norm(BoundaryCurve(c, normalize=False)) == pytest.approx(0.7)
    k = 3
    c = np.zeros((3, 9), complex)
    c[1, 4 + k] = 1.0
    # Hermitian symmetrization splits the unit mode across ±k.
    c[1, 4 - k] = 1.0
    assert curve_sobolev_norm(BoundaryCurve(c, normalize=False)) == pytest.approx(np.sqrt(2 * (1 + k**2)))
    a = wavy(0.3, 3)
    R = Rotation.from_euler("xyz", [0.4, 1.0, -0.2]).as_matrix()
    assert curve_sobolev_norm(BoundaryCurve(R @ a.fourier_coeffs)) == pytest.approx(curve_sobolev_norm(a), abs=1e-10)
    th = uniform_angles(64)
    samples = np.stack([np.cos(3 * th), 0 * th], -1)
    assert periodic_sobolev_norm(samples) == pytest.approx(np.sqrt(2 * 0.25 * 10))


@pytest.mark.parametrize("spec", [s for s in map(curve_to_spec, corpus())] + [{"type": "great_circle", "tilt": 1.0}])
def test_spec_roundtrip(spec):
    c = curve_from_spec(spec)
    assert np.allclose(curve_from_spec(curve_to_spec(c)).fourier_coeffs, c.fourier_coeffs)
    assert curve_label(spec) == c.label


def test_fourier_spec_roundtrip():
    c = BoundaryCurve(latitude(0.2).fourier_coeffs)
    spec = curve_to_spec(c)
    assert spec["type"] == "fourier"
    assert np.allclose(curve_from_spec(spec).fourier_coeffs, c.fourier_coeffs)


@pytest.mark.parametrize("spec", [{}, {"type": "wavy", "amplitude": 0.1}, {"type": "nope"}, {"type": "latitude", "height": 1.5}])
def test_spec_errors(spec):
    with pytest.raises(ParameterError):
        curve_from_spec(spec)


def test_corpus_size_and_family():
    assert len(corpus()) == 12
    fam = CurveFamily.between(equator(), great_circle(0.5))
    assert np.allclose(fam.member(0.0).fourier_coeffs, equator().fourier_coeffs)
    assert np.allclose(eval_curve(fam.member(1.0), TH), eval_curve(great_circle(0.5), TH), atol=1e-14)
    with pytest.raises(ParameterError):
        fam.member(1.5)


def test_transformed_curve_with_translation(rng):
    g = random_isometry(rng, 0.3)
    a = equator()
    assert np.allclose(eval_curve(transformed_curve(a, g), TH), g(eval_curve(a, TH)), atol=1e-9)
