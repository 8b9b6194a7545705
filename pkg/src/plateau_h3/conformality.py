"""Complex differential, Hopf differential and the conformality trace k."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .disk import DiskGrid
from .errors import ParameterError
from .harmonic import DiskMap

GAUGES = ("hyperbolic", "euclidean")
HOLOMORPHY_INNER_RADIUS = 0.2


@dataclass(frozen=True)
class HopfField:
    """Q on every grid row; ``metric_gauge`` is 'hyperbolic' or 'euclidean'."""

    values: np.ndarray
    metric_gauge: str = "hyperbolic"


@dataclass(frozen=True)
class ConformalityTrace:
    """Samples of k on the evaluation circle."""

    values: np.ndarray
    eval_radius_value: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ParameterError("conformality trace has non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def sup(self) -> float:
        return float(np.abs(self.values).max())

    def __sub__(self, other: "ConformalityTrace") -> "ConformalityTrace":
        return ConformalityTrace(self.values - other.values, self.eval_radius_value)


@dataclass(frozen=True)
class MomentReport:
    m0: float
    mc: float
    ms: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.m0, self.mc, self.ms)

    @property
    def sup(self) -> float:
        return max(abs(self.m0), abs(self.mc), abs(self.ms))


def _components(phi) -> np.ndarray:
    return phi.components if isinstance(phi, DiskMap) else np.asarray(phi)


def complex_differential(phi: DiskMap | np.ndarray, grid: DiskGrid) -> np.ndarray:
    """δφ = e^{−iθ}(φ_r − (i/r) φ_θ) = 2∂_z φ, componentwise.

    Accepts a DiskMap (result shape (n_r, n_theta, 3)) or a field with
    grid axes last (result has the same shape).
    """
    F = _components(phi)
    d = np.exp(-1j * grid.theta) * (grid.dr(F) - 1j * grid.dt(F) / grid.r)
    return np.moveaxis(d, 0, -1) if isinstance(phi, DiskMap) else d


def hopf_differential(phi: DiskMap, grid: DiskGrid, gauge: str = "hyperbolic") -> HopfField:
    """Q = w·⟨δφ, δφ⟩ (complex bilinear), w = λ(φ)² or 1 by gauge."""
    if gauge not in GAUGES:
        raise ParameterError(f"gauge must be one of {GAUGES}, got '{gauge}'")
    F = _components(phi)
    d = complex_differential(F, grid)
    Q = np.sum(d * d, axis=0)
    if gauge == "hyperbolic":
        Q = Q * (2.0 / (1.0 - np.sum(F * F, axis=0))) ** 2
    return HopfField(Q, gauge)


def trace_from_hopf(Q: HopfField, grid: DiskGrid) -> ConformalityTrace:
    i = grid.eval_radius
    z = grid.radii[i] * np.exp(1j * grid.theta)
    return ConformalityTrace(-np.imag(z**2 * Q.values[i]), grid.eval_radius_value)


def conformality_trace(phi: DiskMap, grid: DiskGrid) -> ConformalityTrace:
    """k = −Im(z² Q) on the evaluation circle, hyperbolic gauge.

    Equivalently 2 r λ² φ_r·φ_θ.
    """
    return trace_from_hopf(hopf_differential(phi, grid, "hyperbolic"), grid)


def moment_report(k: ConformalityTrace | np.ndarray) -> MomentReport:
    """Trapezoid-rule integrals of h, h cos θ, h sin θ over the circle."""
    h = np.asarray(getattr(k, "values", k), dtype=float)
    n = h.size
    th = 2.0 * np.pi * np.arange(n) / n
    w = 2.0 * np.pi / n
    return MomentReport(float(w * h.sum()), float(w * (h * np.cos(th)).sum()), float(w * (h * np.sin(th)).sum()))


def dbar(F: np.ndarray, grid: DiskGrid) -> np.ndarray:
    """∂̄F = ½ e^{iθ}(F_r + (i/r) F_θ) for complex F on the grid."""
    F = np.asarray(F, dtype=complex)
    return 0.5 * np.exp(1j * grid.theta) * (grid.dr(F) + 1j * grid.dt(F) / grid.r)


def holomorphy_residual(Q: HopfField, grid: DiskGrid) -> float:
    """sup |∂̄Q| over the annulus 0.2 ≤ r ≤ r_eval."""
    rows = (grid.radii >= HOLOMORPHY_INNER_RADIUS) & (grid.radii <= grid.eval_radius_value)
    return float(np.abs(dbar(Q.values, grid)[rows]).max())


def annulus_sup(Q: HopfField, grid: DiskGrid) -> float:
    """sup |Q| over the same annulus, used by the gauge and maximum-principle checks."""
    rows = (grid.radii >= HOLOMORPHY_INNER_RADIUS) & (grid.radii <= grid.eval_radius_value)
    return float(np.abs(Q.values[rows]).max())


def trace_fourier(k: ConformalityTrace | np.ndarray, m: int) -> np.ndarray:
    """Coefficients [a0, a1, b1, ..., am, bm] of h = a0 + Σ a_j cos jθ + b_j sin jθ."""
    h = np.asarray(getattr(k, "values", k), dtype=float)
    n = h.size
    if 2 * m >= n:
        raise ParameterError(f"mode cutoff {m} not resolved by {n} samples")
    F = np.fft.rfft(h) / n
    out = np.empty(2 * m + 1)
    out[0] = F[0].real
    out[1::2] = 2.0 * F[1 : m + 1].real
    out[2::2] = -2.0 * F[1 : m + 1].imag
    return out
