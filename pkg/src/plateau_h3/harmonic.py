"""Harmonic extension of boundary data into the Poincaré ball.

The discrete harmonic-map system

    τ(φ) = Δφ + Γ(φ)(φ_r, φ_r) + Γ(φ)(φ_θ, φ_θ)/r² = 0

is collocated on a :class:`DiskGrid` with Dirichlet data on the last row and
solved by damped Newton iteration. Linear systems are solved either by dense
LU (small grids) or by GMRES preconditioned with a sparse LU factorization of
the second-order stencil Jacobian (large grids).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import brentq

from .ball import BallIsometry, truncate_in_frame
from .curves import rotation_x
from .disk import DiskGrid
from .errors import DegeneracyError, ParameterError

log = logging.getLogger(__name__)

DENSE_LIMIT = 2600
DAMPING_MIN = 2.0**-20
# Accepted steps without halving the best residual before declaring a floor.
STALL_STEPS = 3
PRECOND_REUSE = 1e-2


@dataclass(frozen=True)
class TensionReport:
    sup_residual: float
    l2_residual: float
    iterations: int
    converged: bool
    history: tuple[float, ...] = ()


@dataclass(frozen=True)
class DiskMap:
    """Grid values of a map from the disk into the ball.

    ``values`` has shape (n_r, n_theta, 3); the last row carries the Dirichlet
    data obtained by truncating boundary samples at depth ``eps`` (along the
    rays of ``frame`` when one is set).
    """

    values: np.ndarray
    eps: float
    source: str = ""
    frame: BallIsometry | None = field(default=None, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3 or v.shape[-1] != 3:
            raise ParameterError("DiskMap values must have shape (n_r, n_theta, 3)")
        if not np.all(np.sum(v * v, axis=-1) < 1.0):
            raise DegeneracyError("DiskMap values must lie in the open unit ball")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def components(self) -> np.ndarray:
        """View of shape (3, n_r, n_theta)."""
        return np.moveaxis(self.values, -1, 0)

    @property
    def boundary_row(self) -> np.ndarray:
        return self.values[-1]

    def transformed(self, g: BallIsometry) -> "DiskMap":
        frame = g if self.frame is None else g.compose(self.frame)
        return DiskMap(g(self.values), self.eps, f"{g} . {self.source}", frame)

    @classmethod
    def from_components(cls, phi, eps, source="", frame=None) -> "DiskMap":
        return cls(np.moveaxis(phi, 0, -1), eps, source, frame)


# ---------------------------------------------------------------- tension field and derivatives


def _dot(a, b):
    return np.sum(a * b, axis=0)


def tension_field(grid: DiskGrid, phi: np.ndarray) -> np.ndarray:
    """τ(φ) at every node for component-first φ of shape (3, n_r, n_theta)."""
    r = grid.r
    pr, pt = grid.dr(phi), grid.dt(phi)
    G = 2.0 * phi / (1.0 - _dot(phi, phi))

    def quad(X):
        return 2.0 * X * _dot(G, X) - G * _dot(X, X)

    return grid.laplacian(phi) + quad(pr) + quad(pt) / r**2


def tension_jvp(grid: DiskGrid, phi: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Directional derivative Dτ(φ)⟨W⟩."""
    r = grid.r
    s = 1.0 - _dot(phi, phi)
    G = 2.0 * phi / s
    HW = 2.0 * W / s + 4.0 * phi * _dot(phi, W) / s**2

    def dquad(X, dX):
        return (
            2.0 * dX * _dot(G, X) + 2.0 * X * _dot(G, dX) - 2.0 * G * _dot(X, dX)
            + 2.0 * X * _dot(X, HW) - HW * _dot(X, X)
        )

    return grid.laplacian(W) + dquad(grid.dr(phi), grid.dr(W)) + dquad(grid.dt(phi), grid.dt(W)) / r**2


def _coefficient_fields(grid: DiskGrid, phi: np.ndarray):
    """Nodewise 3x3 coefficient fields of the Jacobian.

    Dτ⟨W⟩ = ΔW + Mr·W_r + Mt·W_θ + C·W, each coefficient shaped (3, 3, M).
    """
    M = grid.size
    pr = grid.dr(phi).reshape(3, M)
    pt = grid.dt(phi).reshape(3, M)
    p = phi.reshape(3, M)
    rr = np.repeat(grid.radii, grid.n_theta)
    s = 1.0 - _dot(p, p)
    G = 2.0 * p / s
    I3 = np.eye(3)[:, :, None]
    H = 2.0 * I3 / s + 4.0 * p[:, None] * p[None, :] / s**2

    def MX(X):
        return 2.0 * _dot(G, X) * I3 + 2.0 * X[:, None] * G[None, :] - 2.0 * G[:, None] * X[None, :]

    def PX(X):
        return 2.0 * X[:, None] * X[None, :] - _dot(X, X) * I3

    Cf = np.einsum("ijm,jlm->ilm", PX(pr) + PX(pt) / rr**2, H)
    return MX(pr), MX(pt) / rr**2, Cf


def _interior_index(grid: DiskGrid) -> np.ndarray:
    mask = np.zeros((3, grid.n_r, grid.n_theta), dtype=bool)
    mask[:, :-1, :] = True
    return np.flatnonzero(mask.ravel())


def dense_jacobian(grid: DiskGrid, phi: np.ndarray) -> np.ndarray:
    """Full collocation Jacobian on all 3·n_r·n_theta unknowns."""
    ops = grid.dense_operators
    Mr, Mt, Cf = _coefficient_fields(grid, phi)
    M = grid.size
    J = np.empty((3 * M, 3 * M))
    for k in range(3):
        for l in range(3):
            blk = Mr[k, l][:, None] * ops["dr"] + Mt[k, l][:, None] * ops["dt"]
            blk[np.diag_indices(M)] += Cf[k, l]
            if k == l:
                blk += ops["lap"]
            J[k * M:(k + 1) * M, l * M:(l + 1) * M] = blk
    return J


def stencil_jacobian(grid: DiskGrid, phi: np.ndarray) -> sp.csc_matrix:
    """Jacobian with spectral derivatives replaced by second-order stencils."""
    ops = grid.stencil_operators
    Mr, Mt, Cf = _coefficient_fields(grid, phi)
    blocks = [[None] * 3 for _ in range(3)]
    for k in range(3):
        for l in range(3):
            b = sp.diags(Mr[k, l]) @ ops["dr"] + sp.diags(Mt[k, l]) @ ops["dt"] + sp.diags(Cf[k, l])
            if k == l:
                b = b + ops["lap"]
            blocks[k][l] = b
    return sp.bmat(blocks, format="csc")


class Linearization:
    """A factorized Jacobian at a fixed state, reusable for chord iterations."""

    def __init__(self, grid: DiskGrid, phi: np.ndarray, method: str, near: "Linearization | None" = None):
        """``near``: a Krylov linearization at a state within PRECOND_REUSE
        whose preconditioner factorization is reused."""
        self.grid = grid
        self.phi = phi.copy()
        self.method = method
        self.index = _interior_index(grid)
        idx = self.index
        if method == "dense":
            J = dense_jacobian(grid, phi)[np.ix_(idx, idx)]
            self._lu = sla.lu_factor(J, check_finite=False)
        elif method == "krylov":
            if (
                near is not None and near.method == "krylov" and near.grid == grid
                and np.abs(near.phi - phi).max() < PRECOND_REUSE
            ):
                self._splu = near._splu
            else:
                JF = stencil_jacobian(grid, phi)[idx][:, idx].tocsc()
                self._splu = spla.splu(JF, permc_spec="MMD_AT_PLUS_A")
        else:
            raise ParameterError(f"unknown linear solver '{method}'")
        self.gmres_iterations = 0

    def _expand(self, x):
        W = np.zeros(3 * self.grid.size)
        W[self.index] = x
        return W.reshape(3, self.grid.n_r, self.grid.n_theta)

    def solve(self, rhs: np.ndarray, rtol: float = 1e-11) -> np.ndarray:
        """Solve J·W = rhs on interior nodes; rhs and W are (3, n_r, n_theta).

        ``rtol`` applies to the Krylov path only.
        """
        b = rhs.reshape(-1)[self.index]
        if self.method == "dense":
            x = sla.lu_solve(self._lu, b, check_finite=False)
        else:
            n = b.size
            A = spla.LinearOperator(
                (n, n), lambda v: tension_jvp(self.grid, self.phi, self._expand(v)).reshape(-1)[self.index]
            )
            P = spla.LinearOperator((n, n), self._splu.solve)
            count = [0]

            def cb(_):
                count[0] += 1

            x, info = spla.gmres(
                A, b, M=P, rtol=rtol, atol=0.0, restart=80, maxiter=20,
                callback=cb, callback_type="pr_norm",
            )
            self.gmres_iterations += count[0]
            if info < 0:
                raise ParameterError("GMRES received invalid input")
        return self._expand(x)


def choose_linear_solver(grid: DiskGrid, method: str = "auto") -> str:
    if method != "auto":
        return method
    unknowns = 3 * (grid.n_r - 1) * grid.n_theta
    return "dense" if unknowns <= DENSE_LIMIT else "krylov"


# ---------------------------------------------------------------- Newton driver


def _report(R, iterations, converged, history):
    interior = R[:, :-1, :]
    return TensionReport(
        sup_residual=float(np.abs(interior).max()),
        l2_residual=float(np.sqrt(np.mean(interior**2))),
        iterations=iterations,
        converged=converged,
        history=tuple(history),
    )


def radial_initial_guess(grid: DiskGrid, dirichlet: np.ndarray, frame: BallIsometry | None = None) -> np.ndarray:
    """Scale boundary data toward the center (the frame center if a frame is set)."""
    r = grid.radii[None, :, None]
    if frame is None:
        return r * dirichlet[:, None, :]
    w = frame.inverse()(dirichlet.T)  # (n_theta, 3)
    inner = r[0][..., None] * w[None, :, :]  # (n_r, n_theta, 3)
    return np.moveaxis(frame(inner), -1, 0)


def newton_harmonic(
    grid: DiskGrid,
    dirichlet: np.ndarray,
    init: np.ndarray | None = None,
    tol: float = 1e-8,
    max_iter: int = 50,
    linear_solver: str = "auto",
    linearization: Linearization | None = None,
    frame: BallIsometry | None = None,
) -> tuple[np.ndarray, TensionReport, Linearization | None]:
    """Damped Newton on the interior nodes with fixed Dirichlet row.

    ``dirichlet`` has shape (3, n_theta). When ``linearization`` is given the
    iteration starts as a chord method with that factorization and switches
    to fresh Jacobians if the contraction is poor. Returns the component-first
    solution, a TensionReport and the last factorization used.
    """
    method = choose_linear_solver(grid, linear_solver)
    phi = radial_initial_guess(grid, dirichlet, frame) if init is None else np.array(init, dtype=float)
    phi[:, -1, :] = dirichlet
    if np.ptp(dirichlet, axis=1).max() == 0.0 and init is None:
        phi[:] = dirichlet[:, :1, None]
    R = tension_field(grid, phi)
    sup = float(np.abs(R[:, :-1]).max())
    history = [sup]
    lin = linearization
    chord = lin is not None
    damping = 1.0
    best, stalled = sup, 0
    for it in range(1, max_iter + 1):
        if sup < tol:
            return phi, _report(R, it - 1, True, history), lin
        if stalled >= STALL_STEPS:
            log.debug("harmonic solve stalled at sup residual %.3e (round-off floor)", sup)
            return phi, _report(R, it - 1, False, history), lin
        if lin is None or not chord:
            lin = Linearization(grid, phi, method, near=lin)
        step = lin.solve(-R)
        l2 = float(np.sqrt(np.mean(R[:, :-1] ** 2)))
        while True:
            trial = phi + damping * step
            if np.all(_dot(trial, trial) < 1.0):
                R_trial = tension_field(grid, trial)
                l2_trial = float(np.sqrt(np.mean(R_trial[:, :-1] ** 2)))
                if l2_trial < l2:
                    break
                left_ball = False
            else:
                left_ball = True
            damping *= 0.5
            if damping < DAMPING_MIN:
                if left_ball:
                    raise DegeneracyError("harmonic solve: damping underflow, every trial step left the ball")
                if chord:
                    chord = False
                    damping = 1.0
                    lin = None
                    break
                log.debug("harmonic solve stagnated at sup residual %.3e", sup)
                return phi, _report(R, it, False, history), lin
        if lin is None:
            continue
        new_sup = float(np.abs(R_trial[:, :-1]).max())
        if chord and new_sup > 0.25 * sup:
            chord = False
        phi, R, sup = trial, R_trial, new_sup
        history.append(sup)
        if sup < 0.5 * best:
            best, stalled = sup, 0
        else:
            stalled += 1
        damping = min(1.0, 2.0 * damping)
    return phi, _report(R, max_iter, sup < tol, history), lin


def _check_eps(eps):
    if not 1e-4 <= eps <= 0.2:
        raise ParameterError(f"eps must lie in [1e-4, 0.2], got {eps}")


def harmonic_extend(
    boundary: np.ndarray,
    grid: DiskGrid,
    eps: float = 1e-2,
    tol: float = 1e-8,
    max_iter: int = 50,
    init: DiskMap | np.ndarray | None = None,
    frame: BallIsometry | None = None,
    linear_solver: str = "auto",
    source: str = "",
) -> tuple[DiskMap, TensionReport]:
    """Harmonic extension of sphere-valued boundary samples (n_theta, 3).

    The Dirichlet data is the truncation of the samples at depth ``eps``.
    Non-convergence is reported (``converged=False``) together with the best
    iterate rather than raised.
    """
    boundary = np.asarray(boundary, dtype=float)
    if boundary.shape != (grid.n_theta, 3):
        raise ParameterError(f"boundary must have shape ({grid.n_theta}, 3), got {boundary.shape}")
    _check_eps(eps)
    dirichlet = truncate_in_frame(boundary, eps, frame).T
    if isinstance(init, DiskMap):
        init = init.components
    phi, report, _ = newton_harmonic(grid, dirichlet, init, tol, max_iter, linear_solver, frame=frame)
    return DiskMap.from_components(phi, eps, source, frame), report


def tension_residual(phi: DiskMap, grid: DiskGrid, tol: float = 1e-8) -> TensionReport:
    """Discrete tension field at interior nodes, as a report."""
    R = tension_field(grid, phi.components)
    rep = _report(R, 0, False, ())
    return TensionReport(rep.sup_residual, rep.l2_residual, 0, rep.sup_residual < tol, ())


# ---------------------------------------------------------------- exact references


def flat_disk(grid: DiskGrid, radius: float) -> np.ndarray:
    """(r, θ) -> radius·(r cos θ, r sin θ, 0) as an (n_r, n_theta, 3) array."""
    R, T = np.meshgrid(grid.radii, grid.theta, indexing="ij")
    return np.stack([radius * R * np.cos(T), radius * R * np.sin(T), np.zeros_like(R)], axis=-1)


def _latitude_isometry(height: float, eps: float) -> tuple[BallIsometry, float]:
    """Vertical translation g and flat radius q with g(q e^{iθ}) = (1−eps)·latitude(h).

    With the translation height s: (1 + q²)s/(1 + s²q²) = (1−eps)|h| fixes q,
    and the horizontal radius condition is solved for s in (0, (1−eps)|h|).
    """
    rho = 1.0 - eps
    if height == 0.0:
        return BallIsometry(), rho
    zt, wt = rho * abs(height), rho * np.sqrt(1.0 - height**2)

    def q_of(s):
        return np.sqrt((zt - s) / (s * (1.0 - zt * s)))

    def mismatch(s):
        q = q_of(s)
        return (1.0 - s**2) * q / (1.0 + s**2 * q**2) - wt

    s = brentq(mismatch, 1e-14 * zt, zt * (1.0 - 1e-14), xtol=1e-16, rtol=1e-15)
    target = np.array([0.0, 0.0, np.sign(height) * s])
    return BallIsometry(np.eye(3), target), float(q_of(s))


def exact_geodesic_disk(circle, grid: DiskGrid, eps: float = 1e-2) -> DiskMap:
    """Exact conformal harmonic solution spanning a truncated round circle.

    ``circle`` is a curve spec dict (equator, great_circle, latitude), a
    BoundaryCurve carrying such a spec, or a BallIsometry ``g`` meaning the
    circle ``g·equator`` truncated in the frame of ``g``.
    """
    _check_eps(eps)
    rho = 1.0 - eps
    if isinstance(circle, BallIsometry):
        return DiskMap(circle(flat_disk(grid, rho)), eps, "isometric image of the flat disk", circle)
    spec = getattr(circle, "spec", circle)
    kind = spec.get("type") if isinstance(spec, dict) else None
    if kind == "equator":
        return DiskMap(flat_disk(grid, rho), eps, "flat equatorial disk")
    if kind == "great_circle":
        R = rotation_x(float(spec["tilt"]))
        return DiskMap(flat_disk(grid, rho) @ R.T, eps, "rotated flat disk")
    if kind == "latitude":
        g, q = _latitude_isometry(float(spec["height"]), eps)
        return DiskMap(g(flat_disk(grid, q)), eps, "translated geodesic disk")
    raise ParameterError(f"exact_geodesic_disk needs a round circle, got {spec!r}")
