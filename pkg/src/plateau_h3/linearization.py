"""Finite-difference assembly and spectral analysis of D_u k.

A tangent variation v is a real trigonometric polynomial with coefficients
[a0, a1, b1, ..., am, bm], acting additively on reparametrization
coefficients. Traces are reduced to the same coefficient layout; the moment
space Z corresponds to dropping the first three entries (modes 0 and 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .ball import BallIsometry, truncate_in_frame
from .conformality import ConformalityTrace, complex_differential, conformality_trace, trace_fourier
from .curves import (
    BoundaryCurve,
    Reparametrization,
    _trig_basis,
    compose_boundary,
    three_point_matrix,
    three_point_project,
)
from .disk import DiskGrid
from .errors import DegeneracyError, ParameterError, SolverError
from .harmonic import (
    DiskMap,
    Linearization,
    TensionReport,
    _check_eps,
    choose_linear_solver,
    newton_harmonic,
    tension_jvp,
)

GAP_THRESHOLD = 1e3
NEGLIGIBLE_RATIO = 1e-6
FRAME_MIN_DET = 1e-8
TANGENT_RTOL = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    """Settings shared by every harmonic solve behind k(α, u)."""

    eps: float = 1e-2
    tension_tol: float = 1e-8
    max_iter: int = 50
    linear_solver: str = "auto"
    frame: BallIsometry | None = None
    # Solves aim this far below tension_tol; meeting tension_tol is enough
    # when the target sits under the round-off floor of the grid.
    target_factor: float = 1e-2

    def __post_init__(self):
        _check_eps(self.eps)
        if not self.tension_tol > 0:
            raise ParameterError("tension_tol must be positive")


@dataclass
class BaseSolution:
    """Harmonic extension of α∘u with its trace and reusable factorization."""

    u: Reparametrization
    disk: DiskMap
    report: TensionReport
    trace: ConformalityTrace
    linearization: Linearization | None = field(repr=False, default=None)


class ConformalityMap:
    """Evaluates u ↦ k(α, u) on a fixed grid, curve and solver configuration."""

    def __init__(self, curve: BoundaryCurve, grid: DiskGrid, config: SolverConfig | None = None):
        self.curve = curve
        self.grid = grid
        self.config = config or SolverConfig()
        self.solves = 0

    def dirichlet(self, u: Reparametrization) -> np.ndarray:
        b = compose_boundary(self.curve, u, self.grid.n_theta)
        return truncate_in_frame(b, self.config.eps, self.config.frame).T

    def solve(self, u: Reparametrization, near: BaseSolution | None = None, chord: bool = False) -> BaseSolution:
        """Harmonic extension at u, warm-started from ``near`` when given.

        With ``chord`` the factorization of ``near`` is reused.
        """
        cfg = self.config
        init = None if near is None else near.disk.components
        lin = None
        if chord and near is not None:
            lin = self._ensure_linearization(near)
        target = min(max(cfg.tension_tol * cfg.target_factor, 0.3 * self.grid.roundoff_floor), 0.5 * cfg.tension_tol)
        phi, report, lin = newton_harmonic(
            self.grid, self.dirichlet(u), init, target,
            cfg.max_iter, cfg.linear_solver, lin, cfg.frame,
        )
        self.solves += 1
        if report.sup_residual >= cfg.tension_tol:
            raise SolverError(
                f"harmonic solve did not converge: sup residual {report.sup_residual:.3e} "
                f">= {cfg.tension_tol:.1e}", report,
            )
        report = TensionReport(report.sup_residual, report.l2_residual, report.iterations, True, report.history)
        disk = DiskMap.from_components(phi, cfg.eps, "harmonic extension of alpha o u", cfg.frame)
        return BaseSolution(u, disk, report, conformality_trace(disk, self.grid), lin)

    def __call__(self, u: Reparametrization) -> ConformalityTrace:
        return self.solve(u).trace

    def _ensure_linearization(self, base: BaseSolution) -> Linearization:
        """Factorization at exactly ``base``; a chord solve leaves the stale one of its seed."""
        lin = base.linearization
        if lin is None or not np.array_equal(lin.phi, base.disk.components):
            method = choose_linear_solver(self.grid, self.config.linear_solver)
            base.linearization = Linearization(self.grid, base.disk.components, method, near=lin)
        return base.linearization

    def solve_pair(
        self, base: BaseSolution, u_plus: Reparametrization, u_minus: Reparametrization
    ) -> tuple[BaseSolution, BaseSolution]:
        """Solves at two nearby reparametrizations symmetric about ``base``.

        Both start from the tangent-linear prediction φ ± W, where W carries
        half the Dirichlet difference on the boundary row and solves the
        linearized tension equation inside; the nonlinear solves then only
        remove an O(h²) residual.
        """
        lin = self._ensure_linearization(base)
        phi = base.disk.components
        W = np.zeros_like(phi)
        W[:, -1, :] = 0.5 * (self.dirichlet(u_plus) - self.dirichlet(u_minus))
        W = W + lin.solve(-tension_jvp(self.grid, phi, W))
        out = []
        for u, sign in ((u_plus, 1.0), (u_minus, -1.0)):
            guess = BaseSolution(u, DiskMap.from_components(phi + sign * W, self.config.eps), base.report,
                                 base.trace, lin)
            out.append(self.solve(u, near=guess, chord=True))
        return out[0], out[1]


# ---------------------------------------------------------------- variations


@dataclass(frozen=True)
class TangentVariation:
    fourier_coeffs: np.ndarray
    constrained: bool = False

    def __post_init__(self):
        object.__setattr__(self, "fourier_coeffs", np.asarray(self.fourier_coeffs, dtype=float))
        if self.constrained:
            defect = np.abs(three_point_matrix(self.m) @ self.fourier_coeffs).max()
            if defect > 1e-12:
                raise ParameterError(f"constrained variation violates the three-point condition by {defect:.1e}")

    @property
    def m(self) -> int:
        return (self.fourier_coeffs.size - 1) // 2

    def __call__(self, theta) -> np.ndarray:
        return _trig_basis(theta, self.m) @ self.fourier_coeffs


def constrained_basis_matrix(m: int) -> np.ndarray:
    """Orthonormal basis (columns) of the coefficient vectors with v(2πk/3) = 0."""
    return sla.null_space(three_point_matrix(m))


def variation_basis(m: int, constrained: bool) -> list[TangentVariation]:
    """Unconstrained: the 2m+1 trig monomials. Constrained: 2m−2 orthonormal
    combinations vanishing at the three fixed angles."""
    if m < 3:
        raise ParameterError(f"mode count m must be >= 3, got {m}")
    if not constrained:
        return [TangentVariation(e) for e in np.eye(2 * m + 1)]
    return [TangentVariation(c, True) for c in constrained_basis_matrix(m).T]


def _shift(u: Reparametrization, v: TangentVariation, t: float) -> Reparametrization:
    m = max(u.m, v.m)
    p = u.with_modes(m).fourier_coeffs.copy()
    p[: v.fourier_coeffs.size] += t * v.fourier_coeffs
    w = Reparametrization(p)
    return three_point_project(w) if v.constrained else w


def _check_step(h):
    if not 1e-7 <= h <= 1e-3:
        raise ParameterError(f"fd step h must lie in [1e-7, 1e-3], got {h}")


def directional_derivative_k(
    alpha: BoundaryCurve,
    u: Reparametrization,
    v: TangentVariation,
    h: float = 1e-5,
    config: SolverConfig | None = None,
    grid: DiskGrid | None = None,
    base: BaseSolution | None = None,
    kmap: ConformalityMap | None = None,
) -> ConformalityTrace:
    """Central difference (k(α, Π(u+hv)) − k(α, Π(u−hv))) / 2h.

    Each evaluation re-solves the harmonic extension, warm-started from the
    base solution at u and reusing its factorization.
    """
    _check_step(h)
    if kmap is None:
        kmap = ConformalityMap(alpha, grid or DiskGrid(), config)
    if base is None:
        base = kmap.solve(u)
    sp, sm = kmap.solve_pair(base, _shift(u, v, h), _shift(u, v, -h))
    kp, km = sp.trace, sm.trace
    return ConformalityTrace((kp.values - km.values) / (2.0 * h), kp.eval_radius_value)


def tangent_derivative_k(kmap: ConformalityMap, base: BaseSolution, v: TangentVariation, h: float = 1e-5) -> ConformalityTrace:
    """D_u k⟨v⟩ through the linearized harmonic extension at ``base``.

    The boundary variation is a central difference of the Dirichlet data
    (pointwise, no solve); the interior solves Dτ⟨W⟩ = 0 with the base
    factorization, and k is differentiated analytically.
    """
    _check_step(h)
    grid, u = kmap.grid, base.u
    lin = kmap._ensure_linearization(base)
    F = base.disk.components
    W = np.zeros_like(F)
    W[:, -1, :] = (kmap.dirichlet(_shift(u, v, h)) - kmap.dirichlet(_shift(u, v, -h))) / (2.0 * h)
    W = W + lin.solve(-tension_jvp(grid, F, W), rtol=TANGENT_RTOL)
    i = grid.eval_radius
    d = complex_differential(F, grid)[:, i]
    dW = complex_differential(W, grid)[:, i]
    Fi, Wi = F[:, i], W[:, i]
    s = 1.0 - np.sum(Fi * Fi, axis=0)
    dQ = 16.0 * np.sum(Fi * Wi, axis=0) / s**3 * np.sum(d * d, axis=0) + 8.0 / s**2 * np.sum(d * dW, axis=0)
    z = grid.radii[i] * np.exp(1j * grid.theta)
    return ConformalityTrace(-np.imag(z**2 * dQ), grid.eval_radius_value)


# ---------------------------------------------------------------- closed forms at (equator, id)


def _c(n, rho):
    return 1.0 / (n + 1) - 2.0 * rho**2 / (n + 2) + rho**4 / (n + 3)


def closed_form_multipliers(m: int, eps: float, radius: float, gauge: str = "hyperbolic") -> np.ndarray:
    """Diagonal action of D_u k at (equator, id) on modes j = 0..m.

    Hyperbolic gauge: 8ρ² r^j / c_{j−2}(ρ), the exact linearization of the
    solver's k for the flat disk of radius ρ = 1 − eps. Euclidean gauge:
    ½ (j − 1) r^j, i.e. Re(i z² ∂_z v̄) for the harmonic extension of the
    boundary field i e^{iθ} v(θ).
    """
    j = np.arange(m + 1, dtype=float)
    out = np.zeros(m + 1)
    hi = j >= 2
    if gauge == "hyperbolic":
        rho = 1.0 - eps
        out[hi] = 8.0 * rho**2 * radius ** j[hi] / _c(j[hi] - 2.0, rho)
    elif gauge == "euclidean":
        out[hi] = 0.5 * (j[hi] - 1.0) * radius ** j[hi]
    else:
        raise ParameterError(f"unknown gauge '{gauge}'")
    return out


def closed_form_derivative_at_identity(
    v: TangentVariation,
    grid: DiskGrid,
    eps: float = 1e-2,
    gauge: str = "hyperbolic",
    radius: float | None = None,
) -> ConformalityTrace:
    """D_u k(equator, id)⟨v⟩ in closed form, sampled on the grid angles.

    Modes 0 and 1 of v (the disk Möbius directions i(b̄ + az + bz²)) map to 0.
    """
    r = grid.eval_radius_value if radius is None else float(radius)
    mult = closed_form_multipliers(v.m, eps, r, gauge)
    c = v.fourier_coeffs
    scaled = np.zeros_like(c)
    scaled[1::2] = mult[1:] * c[1::2]
    scaled[2::2] = mult[1:] * c[2::2]
    return ConformalityTrace(_trig_basis(grid.theta, v.m) @ scaled, r)


def closed_form_operator(m: int, eps: float, radius: float, constrained: bool = True) -> np.ndarray:
    """The closed-form matrix in the same layout as :func:`assemble_operator`."""
    mult = closed_form_multipliers(m, eps, radius)
    D = np.diag(np.r_[mult[0], np.repeat(mult[1:], 2)])
    if constrained:
        return D[3:] @ constrained_basis_matrix(m)
    return D


# ---------------------------------------------------------------- operator assembly


@dataclass(frozen=True)
class BoundaryFrame:
    """Frame along the evaluation circle: a3 = ∂_θ(α∘u), b = ∂_r(α∘u)."""

    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    b: np.ndarray

    @property
    def min_determinant(self) -> float:
        det = np.einsum("ij,ij->i", np.cross(self.a1, self.a2), self.a3)
        return float(det.min())


def boundary_frame(disk: DiskMap, grid: DiskGrid) -> BoundaryFrame:
    """Complete a3 to a frame by Gram–Schmidt against fixed ambient axes."""
    F = disk.components
    i = grid.eval_radius
    a3 = np.moveaxis(grid.dt(F)[:, i], 0, -1)
    b = np.moveaxis(grid.dr(F)[:, i], 0, -1)
    n3 = np.linalg.norm(a3, axis=-1, keepdims=True)
    t = a3 / np.where(n3 > 0, n3, 1.0)
    axes = np.eye(3)
    # Seed with the ambient axis least aligned with a3 at each node.
    seed = axes[np.argmin(np.abs(t), axis=-1)]
    a1 = seed - np.sum(seed * t, axis=-1, keepdims=True) * t
    a1 /= np.linalg.norm(a1, axis=-1, keepdims=True)
    a2 = np.cross(t, a1)
    return BoundaryFrame(a1, a2, a3, b)


@dataclass(frozen=True)
class LinearizedOperator:
    matrix: np.ndarray
    base_point: tuple[BoundaryCurve, Reparametrization]
    fd_step: float
    basis: np.ndarray  # columns: variation coefficient vectors
    constrained: bool
    z_projected: bool

    @property
    def basis_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def target_dim(self) -> int:
        return self.matrix.shape[0]


def trace_rows(k: ConformalityTrace, m: int, z_projected: bool) -> np.ndarray:
    c = trace_fourier(k, m)
    return c[3:] if z_projected else c


def assemble_operator(
    alpha: BoundaryCurve,
    u: Reparametrization,
    basis: list[TangentVariation],
    h: float = 1e-5,
    config: SolverConfig | None = None,
    grid: DiskGrid | None = None,
    z_projected: bool | None = None,
    base: BaseSolution | None = None,
    kmap: ConformalityMap | None = None,
    method: str = "fd",
) -> LinearizedOperator:
    """Columns are trace coefficients of D_u k along each basis field.

    ``z_projected`` defaults to True for a constrained basis (square operator
    into Z) and False otherwise (all modes 0..m). ``method`` is "fd"
    (central differences of full nonlinear solves) or "tangent" (linearized
    harmonic extension, one back-substitution per column).
    """
    _check_step(h)
    if method not in ("fd", "tangent"):
        raise ParameterError(f"method must be 'fd' or 'tangent', got '{method}'")
    if not basis:
        raise ParameterError("basis must be non-empty")
    constrained = basis[0].constrained
    if z_projected is None:
        z_projected = constrained
    m = basis[0].m
    if kmap is None:
        kmap = ConformalityMap(alpha, grid or DiskGrid(), config)
    if base is None:
        base = kmap.solve(u)
    frame = boundary_frame(base.disk, kmap.grid)
    if not frame.min_determinant > FRAME_MIN_DET:
        raise DegeneracyError(
            f"boundary frame degenerate (min det {frame.min_determinant:.2e}): a1, a2, a3 are not "
            "independent, so the elliptic boundary system hypothesis fails"
        )
    cols = []
    for v in basis:
        if method == "fd":
            dk = directional_derivative_k(alpha, u, v, h, base=base, kmap=kmap)
        else:
            dk = tangent_derivative_k(kmap, base, v, h)
        cols.append(trace_rows(dk, m, z_projected))
    B = np.column_stack([v.fourier_coeffs for v in basis])
    return LinearizedOperator(np.column_stack(cols), (alpha, u), h, B, constrained, z_projected)


# ---------------------------------------------------------------- spectrum


@dataclass(frozen=True)
class SpectrumReport:
    singular_values: np.ndarray
    numeric_kernel_dim: int | None
    numeric_coker_dim: int | None
    gap_ratio: float
    ambiguous: bool = False

    @property
    def sigma_min_ratio(self) -> float:
        s = self.singular_values
        return float(s[-1] / s[0]) if s[0] > 0 else 0.0

    @property
    def index(self) -> int | None:
        if self.ambiguous:
            return None
        return self.numeric_kernel_dim - self.numeric_coker_dim

    def to_dict(self) -> dict:
        return {
            "singular_values": [float(x) for x in self.singular_values],
            "numeric_kernel_dim": self.numeric_kernel_dim,
            "numeric_coker_dim": self.numeric_coker_dim,
            "gap_ratio": float(self.gap_ratio),
            "ambiguous": bool(self.ambiguous),
            "sigma_min_ratio": self.sigma_min_ratio,
        }


def numeric_rank(s: np.ndarray) -> tuple[int | None, float]:
    """Rank by the largest ratio between consecutive singular values.

    A ratio above GAP_THRESHOLD fixes the rank. Without such a gap the matrix
    counts as full rank unless its smallest singular values fall below
    NEGLIGIBLE_RATIO·σ_max, in which case the rank is ambiguous (None).
    """
    s = np.asarray(s, dtype=float)
    if s.size == 0 or s[0] == 0.0:
        return 0, np.inf
    floor = s[0] * np.finfo(float).tiny
    ratios = s[:-1] / np.maximum(s[1:], floor)
    if ratios.size and ratios.max() > GAP_THRESHOLD:
        return int(np.argmax(ratios)) + 1, float(ratios.max())
    gap = float(ratios.max()) if ratios.size else 1.0
    if s[-1] < NEGLIGIBLE_RATIO * s[0]:
        return None, gap
    return s.size, gap


def spectrum(opr: LinearizedOperator | np.ndarray) -> SpectrumReport:
    A = getattr(opr, "matrix", opr)
    A = np.asarray(A, dtype=float)
    s = sla.svdvals(A)
    rank, gap = numeric_rank(s)
    if rank is None:
        return SpectrumReport(s, None, None, gap, True)
    n_rows, n_cols = A.shape
    return SpectrumReport(s, n_cols - rank, n_rows - rank, gap, False)


def null_space_coefficients(opr: LinearizedOperator, dim: int) -> np.ndarray:
    """Variation coefficients spanning the ``dim`` smallest right singular vectors."""
    _, _, vt = sla.svd(opr.matrix)
    return opr.basis @ vt[-dim:].T


def principal_angles(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return sla.subspace_angles(A, B)
