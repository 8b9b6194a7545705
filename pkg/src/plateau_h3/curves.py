"""Boundary curves on the sphere at infinity and circle reparametrizations."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .ball import BallIsometry
from .errors import DegeneracyError, ParameterError

M_CURVE = 32
THREE_POINTS = 2.0 * np.pi * np.arange(3) / 3.0
MONOTONE_GRID = 4096


# ---------------------------------------------------------------- curves


@dataclass(frozen=True)
class BoundaryCurve:
    """Fourier-parametrized curve, radially normalized onto the unit sphere.

    ``fourier_coeffs[c, n + m]`` is the mode-``n`` coefficient of component
    ``c``, for ``n = -m..m``. The coefficients are Hermitian in ``n`` so the
    raw curve is real.
    """

    fourier_coeffs: np.ndarray
    normalize: bool = True
    spec: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        c = np.asarray(self.fourier_coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[0] != 3 or c.shape[1] % 2 == 0:
            raise ParameterError("fourier_coeffs must have shape (3, 2m+1)")
        # Enforce Hermitian symmetry so evaluation is exactly real.
        c = 0.5 * (c + np.conj(c[:, ::-1]))
        object.__setattr__(self, "fourier_coeffs", c)

    @property
    def m_curve(self) -> int:
        return (self.fourier_coeffs.shape[1] - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        m = self.m_curve
        return np.arange(-m, m + 1)

    @property
    def label(self) -> str:
        return curve_label(self.spec) if self.spec else "custom"

    def raw(self, theta, order: int = 0) -> np.ndarray:
        """Unnormalized Fourier series (or its derivative), shape (..., 3)."""
        theta = np.asarray(theta, dtype=float)
        n = self.modes
        E = np.exp(1j * theta[..., None] * n) * (1j * n) ** order
        return np.real(E @ self.fourier_coeffs.T)

    def __call__(self, theta) -> np.ndarray:
        return eval_curve(self, theta)


def eval_curve(alpha: BoundaryCurve, theta) -> np.ndarray:
    """Points α(θ) on the unit sphere, shape (..., 3)."""
    f = alpha.raw(theta)
    if not alpha.normalize:
        return f
    return f / np.linalg.norm(f, axis=-1, keepdims=True)


def _normalized_derivatives(alpha: BoundaryCurve, theta, order: int) -> list[np.ndarray]:
    """Derivatives 0..order of f/|f| via Leibniz on f · w^{-1/2}, w = f·f."""
    f = [alpha.raw(theta, k) for k in range(order + 1)]
    if not alpha.normalize:
        return f
    dot = lambda a, b: np.sum(a * b, axis=-1, keepdims=True)
    w = [dot(f[0], f[0])]
    if order >= 1:
        w.append(2 * dot(f[0], f[1]))
    if order >= 2:
        w.append(2 * (dot(f[1], f[1]) + dot(f[0], f[2])))
    if order >= 3:
        w.append(2 * (3 * dot(f[1], f[2]) + dot(f[0], f[3])))
    w0 = w[0]
    g = [w0 ** -0.5]
    if order >= 1:
        g.append(-0.5 * w0 ** -1.5 * w[1])
    if order >= 2:
        g.append(0.75 * w0 ** -2.5 * w[1] ** 2 - 0.5 * w0 ** -1.5 * w[2])
    if order >= 3:
        g.append(
            -1.875 * w0 ** -3.5 * w[1] ** 3
            + 2.25 * w0 ** -2.5 * w[1] * w[2]
            - 0.5 * w0 ** -1.5 * w[3]
        )
    return [sum(comb(n, j) * f[j] * g[n - j] for j in range(n + 1)) for n in range(order + 1)]


def curve_derivative(alpha: BoundaryCurve, theta, order: int) -> np.ndarray:
    """Derivative of the normalized curve, ``order`` in 1..3."""
    if order not in (1, 2, 3):
        raise ParameterError(f"order must be 1, 2 or 3, got {order}")
    return _normalized_derivatives(alpha, theta, order)[order]


def uniform_angles(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def immersion_margin(alpha: BoundaryCurve, n_samples: int) -> float:
    """min |α′(θ)| over ``n_samples`` uniform angles."""
    if n_samples < 4 * alpha.m_curve:
        raise ParameterError(f"n_samples must be at least 4*m_curve = {4 * alpha.m_curve}")
    d = curve_derivative(alpha, uniform_angles(n_samples), 1)
    return float(np.linalg.norm(d, axis=-1).min())


def simplicity_margin(alpha: BoundaryCurve, n_samples: int = 256) -> float:
    """Bi-Lipschitz constant min |α(θi) − α(θj)| / |e^{iθi} − e^{iθj}| over i ≠ j.

    Positive exactly when the sampled curve has no self-intersections.
    """
    th = uniform_angles(n_samples)
    p = eval_curve(alpha, th)
    dp = np.linalg.norm(p[:, None] - p[None, :], axis=-1)
    dc = np.abs(np.exp(1j * th)[:, None] - np.exp(1j * th)[None, :])
    off = ~np.eye(n_samples, dtype=bool)
    return float((dp[off] / dc[off]).min())


def fourier_coeffs_from_samples(samples: np.ndarray, m: int) -> np.ndarray:
    """Modes −m..m of uniformly sampled periodic data, shape (3, 2m+1)."""
    n = samples.shape[0]
    if n < 2 * m + 1:
        raise ParameterError("need at least 2m+1 samples")
    F = np.fft.fft(samples, axis=0) / n
    idx = np.arange(-m, m + 1) % n
    return F[idx].T


def curve_from_function(fn, m: int = M_CURVE, spec: dict | None = None, oversample: int = 8) -> BoundaryCurve:
    """Fit a BoundaryCurve to a vectorized map θ -> (..., 3) on the sphere."""
    samples = np.asarray(fn(uniform_angles(oversample * m)), dtype=float)
    return BoundaryCurve(fourier_coeffs_from_samples(samples, m), spec=spec)


def _equator_coeffs(m: int = M_CURVE) -> np.ndarray:
    c = np.zeros((3, 2 * m + 1), complex)
    c[0, m + 1] = c[0, m - 1] = 0.5
    c[1, m + 1], c[1, m - 1] = -0.5j, 0.5j
    return c


def rotation_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def equator(m: int = M_CURVE) -> BoundaryCurve:
    return BoundaryCurve(_equator_coeffs(m), spec={"type": "equator"})


def great_circle(tilt: float, m: int = M_CURVE) -> BoundaryCurve:
    """Equator rotated by ``tilt`` about the x-axis."""
    c = rotation_x(tilt) @ _equator_coeffs(m)
    return BoundaryCurve(c, spec={"type": "great_circle", "tilt": float(tilt)})


def latitude(height: float, m: int = M_CURVE) -> BoundaryCurve:
    """Small circle z = height."""
    if not -1.0 < height < 1.0:
        raise ParameterError("latitude height must lie in (-1, 1)")
    c = np.sqrt(1.0 - height**2) * _equator_coeffs(m)
    c[2, m] = height
    return BoundaryCurve(c, spec={"type": "latitude", "height": float(height)})


def wavy_point(theta, amplitude: float, frequency: int) -> np.ndarray:
    """Latitude graph with polar angle π/2 + a cos(kθ)."""
    ph = np.pi / 2 + amplitude * np.cos(frequency * np.asarray(theta))
    return np.stack([np.sin(ph) * np.cos(theta), np.sin(ph) * np.sin(theta), np.cos(ph)], axis=-1)


def wavy(amplitude: float, frequency: int, m: int = M_CURVE) -> BoundaryCurve:
    spec = {"type": "wavy", "amplitude": float(amplitude), "frequency": int(frequency)}
    return curve_from_function(lambda t: wavy_point(t, amplitude, frequency), m, spec)


def transformed_curve(alpha: BoundaryCurve, g: BallIsometry) -> BoundaryCurve:
    """The curve g·α, refitted in Fourier space."""
    return curve_from_function(lambda t: g(eval_curve(alpha, t)), alpha.m_curve)


def curve_sobolev_norm(alpha: BoundaryCurve) -> float:
    """(Σ (1 + n²)|a_n|²)^{1/2} over the three raw components."""
    n = alpha.modes
    return float(np.sqrt(np.sum((1.0 + n**2) * np.abs(alpha.fourier_coeffs) ** 2)))


def periodic_sobolev_norm(samples: np.ndarray) -> float:
    """Same weighted norm for uniformly sampled periodic data (n, d)."""
    n = samples.shape[0]
    F = np.fft.fft(samples, axis=0) / n
    k = np.fft.fftfreq(n, 1.0 / n)
    return float(np.sqrt(np.sum((1.0 + k[:, None] ** 2) * np.abs(F) ** 2)))


# ---------------------------------------------------------------- corpus and JSON


def curve_label(spec: dict) -> str:
    t = spec.get("type")
    if t == "wavy":
        return f"wavy_a{spec['amplitude']:g}_k{spec['frequency']}"
    if t == "great_circle":
        return f"great_circle_tilt{spec['tilt']:g}"
    if t == "latitude":
        return f"latitude_h{spec['height']:g}"
    return str(t)


CORPUS_SPECS: list[dict] = (
    [{"type": "equator"}, {"type": "great_circle", "tilt": 0.6}, {"type": "latitude", "height": 0.4}]
    + [
        {"type": "wavy", "amplitude": a, "frequency": k}
        for a in (0.1, 0.3, 0.5)
        for k in (2, 3, 4)
    ]
)


def curve_from_spec(spec: dict) -> BoundaryCurve:
    """Build a curve from its JSON description."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise ParameterError("curve spec must be an object with a 'type' field")
    t = spec["type"]
    try:
        if t == "equator":
            return equator()
        if t == "great_circle":
            return great_circle(float(spec["tilt"]))
        if t == "latitude":
            return latitude(float(spec["height"]))
        if t == "wavy":
            a, k = float(spec["amplitude"]), spec["frequency"]
            if int(k) != k or k < 1:
                raise ParameterError("curve.frequency must be a positive integer")
            return wavy(a, int(k))
        if t == "fourier":
            rows = spec["coeffs"]
            c = np.array([[complex(re, im) for re, im in row] for row in rows])
            return BoundaryCurve(c, spec=dict(spec))
    except KeyError as e:
        raise ParameterError(f"curve spec of type '{t}' is missing field '{e.args[0]}'") from None
    raise ParameterError(f"unknown curve type '{t}'")


def curve_to_spec(alpha: BoundaryCurve) -> dict:
    if alpha.spec is not None:
        return dict(alpha.spec)
    return {
        "type": "fourier",
        "coeffs": [[[float(z.real), float(z.imag)] for z in row] for row in alpha.fourier_coeffs],
    }


def corpus() -> list[BoundaryCurve]:
    """Equator, a tilted great circle, a latitude circle and nine wavy curves."""
    return [curve_from_spec(s) for s in CORPUS_SPECS]


@dataclass(frozen=True)
class CurveFamily:
    """Straight-line path ``normalize(base + t·perturbation)`` in coefficient space."""

    base: BoundaryCurve
    perturbation: np.ndarray
    parameter_range: tuple[float, float] = (0.0, 1.0)

    @classmethod
    def between(cls, start: BoundaryCurve, end: BoundaryCurve) -> "CurveFamily":
        if start.m_curve != end.m_curve:
            raise ParameterError("endpoint curves must share m_curve")
        return cls(start, end.fourier_coeffs - start.fourier_coeffs, (0.0, 1.0))

    def member(self, t: float) -> BoundaryCurve:
        lo, hi = self.parameter_range
        if not min(lo, hi) - 1e-12 <= t <= max(lo, hi) + 1e-12:
            raise ParameterError(f"parameter {t} outside {self.parameter_range}")
        c = self.base.fourier_coeffs + t * np.asarray(self.perturbation)
        return BoundaryCurve(c)


# ---------------------------------------------------------------- reparametrizations


def _trig_basis(theta, m: int, order: int = 0) -> np.ndarray:
    """Columns [1, cos θ, sin θ, ..., cos mθ, sin mθ] (or their derivatives)."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape + (2 * m + 1,))
    out[..., 0] = 1.0 if order == 0 else 0.0
    for j in range(1, m + 1):
        c, s = np.cos(j * theta), np.sin(j * theta)
        # d^order/dθ^order of (cos, sin) cycles through (c, s), (-s, c), (-c, -s), (s, -c).
        cyc = [(c, s), (-s, c), (-c, -s), (s, -c)][order % 4]
        out[..., 2 * j - 1] = j**order * cyc[0]
        out[..., 2 * j] = j**order * cyc[1]
    return out


@dataclass(frozen=True)
class Reparametrization:
    """u(θ) = θ + p(θ), p a real trigonometric polynomial.

    ``fourier_coeffs`` = [a0, a1, b1, ..., am, bm]. Construction checks
    u′ > 0 on a 4096-point grid and raises DegeneracyError otherwise.
    """

    fourier_coeffs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.fourier_coeffs, dtype=float).copy()
        if p.ndim != 1 or p.size % 2 == 0:
            raise ParameterError("reparametrization coefficients must have odd length 2m+1")
        p.setflags(write=False)
        object.__setattr__(self, "fourier_coeffs", p)
        if self.min_derivative() <= 0.0:
            raise DegeneracyError("reparametrization is not monotone (u' <= 0 somewhere)")

    @classmethod
    def identity(cls, m: int) -> "Reparametrization":
        return cls(np.zeros(2 * m + 1))

    @property
    def m(self) -> int:
        return (self.fourier_coeffs.size - 1) // 2

    def periodic_part(self, theta, order: int = 0) -> np.ndarray:
        return _trig_basis(theta, self.m, order) @ self.fourier_coeffs

    def __call__(self, theta) -> np.ndarray:
        return np.asarray(theta, dtype=float) + self.periodic_part(theta)

    def derivative(self, theta) -> np.ndarray:
        return 1.0 + self.periodic_part(theta, 1)

    def min_derivative(self, n: int = MONOTONE_GRID) -> float:
        """min u′ over n equispaced angles, sampled by FFT."""
        m = self.m
        if 2 * m >= n:
            return float(self.derivative(uniform_angles(n)).min())
        a, b = self.fourier_coeffs[1::2], self.fourier_coeffs[2::2]
        spec = np.zeros(n // 2 + 1, dtype=complex)
        j = np.arange(1, m + 1)
        spec[1 : m + 1] = 0.5 * n * j * (b + 1j * a)
        return float(1.0 + np.fft.irfft(spec, n).min())

    def three_point_defect(self) -> float:
        return float(np.abs(self.periodic_part(THREE_POINTS)).max())

    def with_modes(self, m: int) -> "Reparametrization":
        """Zero-pad or truncate to ``m`` modes."""
        p = np.zeros(2 * m + 1)
        k = min(m, self.m)
        p[: 2 * k + 1] = self.fourier_coeffs[: 2 * k + 1]
        return Reparametrization(p)


def eval_reparam(u: Reparametrization, theta):
    return u(theta)


def compose_boundary(alpha: BoundaryCurve, u: Reparametrization, n_samples: int) -> np.ndarray:
    """Samples of α(u(θ)) on the uniform grid, shape (n_samples, 3)."""
    return eval_curve(alpha, u(uniform_angles(n_samples)))


def three_point_matrix(m: int) -> np.ndarray:
    return _trig_basis(THREE_POINTS, m)


def three_point_project(u: Reparametrization) -> Reparametrization:
    """Least-squares projection of the coefficients onto p(2πk/3) = 0."""
    A = three_point_matrix(u.m)
    p = u.fourier_coeffs
    p = p - A.T @ np.linalg.solve(A @ A.T, A @ p)
    try:
        return Reparametrization(p)
    except DegeneracyError:
        raise DegeneracyError("three-point projection destroyed monotonicity") from None
