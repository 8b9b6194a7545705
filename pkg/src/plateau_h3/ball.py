"""Poincaré ball model of hyperbolic 3-space.

Points are plain ``(..., 3)`` arrays in the hot paths; :class:`BallPoint` and
:class:`IdealPoint` are validated wrappers for single points. Every function
here accepts either form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import ParameterError

# Single geometric tolerance used for validation throughout the package.
GEOM_TOL = 1e-10


def _coords(p) -> np.ndarray:
    return np.asarray(getattr(p, "coords", p), dtype=float)


@dataclass(frozen=True)
class BallPoint:
    """A point of the open unit ball."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float).reshape(3)
        if not np.linalg.norm(c) < 1.0:
            raise ParameterError(f"BallPoint must satisfy |p| < 1, got |p| = {np.linalg.norm(c)}")
        object.__setattr__(self, "coords", c)


@dataclass(frozen=True)
class IdealPoint:
    """A point of the sphere at infinity (a unit vector)."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float).reshape(3)
        if abs(np.linalg.norm(c) - 1.0) > 1e-12:
            raise ParameterError(f"IdealPoint must be a unit vector, got |v| = {np.linalg.norm(c)}")
        object.__setattr__(self, "coords", c)


def mobius_translate(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Hyperbolic translation taking the origin to ``a``, applied to ``x``.

    Works on the closed ball, so ideal points map to ideal points.
    """
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    ax = np.sum(a * x, axis=-1, keepdims=True)
    aa = np.sum(a * a, axis=-1, keepdims=True)
    xx = np.sum(x * x, axis=-1, keepdims=True)
    num = (1.0 + 2.0 * ax + xx) * a + (1.0 - aa) * x
    return num / (1.0 + 2.0 * ax + aa * xx)


@dataclass(frozen=True)
class BallIsometry:
    """Orientation-preserving isometry ``x -> T_a(R x)``.

    ``rotation`` is ``R`` and ``translation_target`` is ``a = g(0)``.
    """

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation_target: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        a = _coords(self.translation_target).reshape(3)
        if np.abs(R.T @ R - np.eye(3)).max() > 1e-12:
            raise ParameterError("rotation must be orthogonal within 1e-12")
        if not np.linalg.norm(a) < 1.0:
            raise ParameterError("translation_target must lie in the open ball")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation_target", a)

    @classmethod
    def identity(cls) -> "BallIsometry":
        return cls()

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return mobius_translate(self.translation_target, x @ self.rotation.T)

    def inverse(self) -> "BallIsometry":
        Rt = self.rotation.T
        return BallIsometry(Rt, -Rt @ self.translation_target)

    def compose(self, other: "BallIsometry") -> "BallIsometry":
        """Return ``self ∘ other``."""
        c = self(other(np.zeros(3)))
        # The remaining isometry fixes the origin, hence is orthogonal; read it
        # off from the images of the ideal basis points.
        cols = mobius_translate(-c, self(other(np.eye(3))))
        R = cols.T
        u, _, vt = np.linalg.svd(R)
        return BallIsometry(u @ vt, c)

    def to_dict(self) -> dict:
        return {
            "rotation": self.rotation.tolist(),
            "translation_target": self.translation_target.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BallIsometry":
        return cls(np.array(d["rotation"], float), np.array(d["translation_target"], float))


def random_isometry(rng: np.random.Generator, max_translation: float = 0.5) -> BallIsometry:
    """Random rotation composed with a translation of Euclidean size < max_translation."""
    R = Rotation.random(random_state=rng).as_matrix()
    d = rng.normal(size=3)
    a = d / np.linalg.norm(d) * rng.uniform(0.0, max_translation)
    return BallIsometry(R, a)


def conformal_factor(p) -> np.ndarray | float:
    """λ(p) = 2/(1 − |p|²)."""
    c = _coords(p)
    return 2.0 / (1.0 - np.sum(c * c, axis=-1))


def hyperbolic_distance(p, q) -> np.ndarray | float:
    """Ball-model distance, in the cancellation-free form 2 asinh(√δ)."""
    x, y = _coords(p), _coords(q)
    d2 = np.sum((x - y) ** 2, axis=-1)
    s = (1.0 - np.sum(x * x, axis=-1)) * (1.0 - np.sum(y * y, axis=-1))
    return 2.0 * np.arcsinh(np.sqrt(d2 / s))


def apply_isometry(g: BallIsometry, p):
    """Apply ``g`` to a point; wrappers come back as the same wrapper type."""
    if isinstance(p, BallPoint):
        return BallPoint(g(p.coords))
    if isinstance(p, IdealPoint):
        v = g(p.coords)
        return IdealPoint(v / np.linalg.norm(v))
    return g(p)


def christoffel_contraction(p, grad_i, grad_j) -> np.ndarray:
    """Γ(p)(X, Y) for the metric λ²δ, vectorized over leading axes.

    With G = ∇ log λ = 2p/(1−|p|²): Γ(X, Y) = X(G·Y) + Y(G·X) − G(X·Y).
    """
    c = _coords(p)
    X = np.asarray(grad_i, dtype=float)
    Y = np.asarray(grad_j, dtype=float)
    G = 2.0 * c / (1.0 - np.sum(c * c, axis=-1, keepdims=True))
    GX = np.sum(G * X, axis=-1, keepdims=True)
    GY = np.sum(G * Y, axis=-1, keepdims=True)
    XY = np.sum(X * Y, axis=-1, keepdims=True)
    return X * GY + Y * GX - G * XY


def truncate_ideal(v, eps: float):
    """Radial push-in ``(1 − eps) v`` of ideal points."""
    if not 0.0 < eps < 1.0:
        raise ParameterError(f"eps must lie in (0, 1), got {eps}")
    if isinstance(v, IdealPoint):
        return BallPoint((1.0 - eps) * v.coords)
    return (1.0 - eps) * _coords(v)


def truncate_in_frame(v, eps: float, frame: BallIsometry | None = None) -> np.ndarray:
    """Truncate along the ``frame``-images of radial rays.

    ``frame(truncate_ideal(frame⁻¹ v))``; with no frame this is plain radial
    truncation. Truncating in the frame of an isometry ``g`` makes the
    Dirichlet problem for ``g·α`` the exact ``g``-image of the one for ``α``.
    """
    if frame is None:
        return truncate_ideal(v, eps)
    w = frame.inverse()(_coords(v))
    w = w / np.linalg.norm(w, axis=-1, keepdims=True)
    return frame(truncate_ideal(w, eps))
