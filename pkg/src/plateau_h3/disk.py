"""Polar grid on the closed unit disk with spectral differentiation.

Radial direction: Chebyshev collocation on the full diameter [-1, 1] with an
odd number of points, keeping only the positive radii. A value at radius -r
and angle θ is the value at (r, θ + π), so the diameter operator folds onto
the half grid through a half-turn shift in θ. There is no node at the center,
and the nodes cluster toward r = 1. Angular direction: FFT.

Fields live in arrays of shape (..., n_r, n_theta); row ``i`` is radius
``radii[i]``, the last row is the boundary circle r = 1.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import chebyshev as C
from scipy.fft import dct

from .errors import ParameterError

EVAL_TARGET = 0.95


def chebyshev_matrix(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Chebyshev differentiation matrix on x_j = cos(πj/N), j = 0..N."""
    x = np.cos(np.pi * np.arange(N + 1) / N)
    c = np.r_[2.0, np.ones(N - 1), 2.0] * (-1.0) ** np.arange(N + 1)
    dX = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return D, x


def _is_three_power_of_two(n: int) -> bool:
    if n < 6 or n % 3:
        return False
    q = n // 3
    return q & (q - 1) == 0


class DiskGrid:
    """Polar collocation grid with ``n_r`` radii in (0, 1] and ``n_theta`` angles."""

    def __init__(self, n_theta: int = 48, n_r: int = 12):
        if not isinstance(n_theta, (int, np.integer)) or not _is_three_power_of_two(int(n_theta)):
            raise ParameterError(
                f"n_theta = {n_theta} must be 3 times a power of two (at least 6): the three-point "
                "condition needs the angles 2πk/3 on the grid"
            )
        if not isinstance(n_r, (int, np.integer)) or n_r < 4:
            raise ParameterError(f"n_r = {n_r} must be an integer >= 4")
        self.n_theta = int(n_theta)
        self.n_r = int(n_r)
        N = 2 * self.n_r - 1
        D, x = chebyshev_matrix(N)
        D2 = D @ D
        # Positive radii in increasing order, and the matching reflected nodes.
        idx = np.arange(self.n_r)[::-1]
        self._N = N
        self._x = x
        self.radii = x[idx].copy()
        self.radii[-1] = 1.0
        self._D1a, self._D1b = D[np.ix_(idx, idx)], D[np.ix_(idx, N - idx)]
        self._D2a, self._D2b = D2[np.ix_(idx, idx)], D2[np.ix_(idx, N - idx)]
        self.theta = 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta
        n = np.fft.fftfreq(self.n_theta, 1.0 / self.n_theta)
        self._k = n.copy()
        self._k_odd = n.copy()
        self._k_odd[self.n_theta // 2] = 0.0
        self.eval_radius = int(np.argmin(np.abs(self.radii[:-1] - EVAL_TARGET)))
        if not 0.9 <= self.radii[self.eval_radius] < 1.0:
            raise ParameterError("grid has no interior radius in [0.9, 1)")

    def __repr__(self) -> str:
        return f"DiskGrid(n_theta={self.n_theta}, n_r={self.n_r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, DiskGrid) and (self.n_theta, self.n_r) == (other.n_theta, other.n_r)

    def __hash__(self) -> int:
        return hash((self.n_theta, self.n_r))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_r, self.n_theta)

    @property
    def size(self) -> int:
        return self.n_r * self.n_theta

    @property
    def eval_radius_value(self) -> float:
        return float(self.radii[self.eval_radius])

    @cached_property
    def roundoff_floor(self) -> float:
        """Machine epsilon times the row-sum norm of the radial second derivative.

        The attainable tension residual sits about an order of magnitude below.
        """
        D2 = np.abs(self._D2a) + np.abs(self._D2b)
        return float(np.finfo(float).eps * D2.sum(axis=1).max())

    @property
    def r(self) -> np.ndarray:
        """Radii as a column for broadcasting against (n_r, n_theta) fields."""
        return self.radii[:, None]

    # ------------------------------------------------------------ spectral derivatives

    def _half_turn(self, F):
        return np.roll(F, -(self.n_theta // 2), axis=-1)

    def dr(self, F: np.ndarray) -> np.ndarray:
        return self._D1a @ F + self._D1b @ self._half_turn(F)

    def drr(self, F: np.ndarray) -> np.ndarray:
        return self._D2a @ F + self._D2b @ self._half_turn(F)

    def dt(self, F: np.ndarray) -> np.ndarray:
        if np.iscomplexobj(F):
            return np.fft.ifft(1j * self._k_odd * np.fft.fft(F, axis=-1), axis=-1)
        h = self.n_theta // 2 + 1
        return np.fft.irfft(1j * self._k_odd[:h] * np.fft.rfft(F, axis=-1), self.n_theta, axis=-1)

    def dtt(self, F: np.ndarray) -> np.ndarray:
        if np.iscomplexobj(F):
            return np.fft.ifft(-(self._k**2) * np.fft.fft(F, axis=-1), axis=-1)
        h = self.n_theta // 2 + 1
        return np.fft.irfft(-(np.abs(self._k[:h]) ** 2) * np.fft.rfft(F, axis=-1), self.n_theta, axis=-1)

    def laplacian(self, F: np.ndarray) -> np.ndarray:
        r = self.r
        return self.drr(F) + self.dr(F) / r + self.dtt(F) / r**2

    # ------------------------------------------------------------ radial interpolation

    def diameter_values(self, F: np.ndarray, parity: int = 1) -> np.ndarray:
        """Values at the full Chebyshev diameter x_0..x_N along the last-but-one axis.

        Returns shape (..., N+1, n_theta); entry j is the value at signed
        radius x_j, for the angle ``theta`` of the column. Use ``parity=-1``
        for a radial derivative, which flips sign across the center.
        """
        pos = F[..., ::-1, :]
        neg = parity * self._half_turn(F)
        return np.concatenate([pos, neg[..., :, :]], axis=-2)

    def interpolate_radius(self, F: np.ndarray, rho, parity: int = 1) -> np.ndarray:
        """Spectral interpolation of F to radii ``rho`` (any values in [-1, 1]).

        Returns shape (..., len(rho), n_theta).
        """
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        vals = self.diameter_values(F, parity)
        x = self._x
        w = (-1.0) ** np.arange(self._N + 1)
        w[0] *= 0.5
        w[-1] *= 0.5
        diff = rho[:, None] - x[None, :]
        exact = np.isclose(diff, 0.0, atol=1e-15)
        diff[exact] = 1.0
        B = w / diff
        B /= B.sum(axis=1, keepdims=True)
        rows, cols = np.nonzero(exact)
        B[rows] = 0.0
        B[rows, cols] = 1.0
        return np.einsum("qj,...jt->...qt", B, vals)

    def center_value(self, F: np.ndarray) -> np.ndarray:
        """Interpolated value at r = 0, averaged over the (redundant) angles."""
        return self.interpolate_radius(F, 0.0)[..., 0, :].mean(axis=-1)

    def radial_integral(self, f: np.ndarray, r_cut: float, parity: int = -1) -> float:
        """∫_0^{r_cut} f(r) dr for samples f at ``radii`` of a function with the given
        parity under r -> -r (odd: -1, even: +1), via Chebyshev expansion."""
        full = np.concatenate([f[::-1], parity * f])
        coef = dct(full, type=1) / self._N
        coef[0] *= 0.5
        coef[-1] *= 0.5
        anti = C.chebint(coef)
        return float(C.chebval(r_cut, anti) - C.chebval(0.0, anti))

    def theta_integral(self, F: np.ndarray) -> np.ndarray:
        """Trapezoid rule over the full circle along the last axis."""
        return F.sum(axis=-1) * (2.0 * np.pi / self.n_theta)

    # ------------------------------------------------------------ dense operators

    @cached_property
    def dense_theta_d1(self) -> np.ndarray:
        return self.dt(np.eye(self.n_theta)).T

    @cached_property
    def dense_theta_d2(self) -> np.ndarray:
        return self.dtt(np.eye(self.n_theta)).T

    @cached_property
    def half_turn_matrix(self) -> np.ndarray:
        n = self.n_theta
        P = np.zeros((n, n))
        P[np.arange(n), (np.arange(n) + n // 2) % n] = 1.0
        return P

    @cached_property
    def dense_operators(self) -> dict[str, np.ndarray]:
        """Matrices acting on fields flattened in (r, θ) row-major order."""
        It, P = np.eye(self.n_theta), self.half_turn_matrix
        Ir = np.eye(self.n_r)
        Dr = np.kron(self._D1a, It) + np.kron(self._D1b, P)
        Drr = np.kron(self._D2a, It) + np.kron(self._D2b, P)
        Dt = np.kron(Ir, self.dense_theta_d1)
        Dtt = np.kron(Ir, self.dense_theta_d2)
        rr = np.repeat(self.radii, self.n_theta)[:, None]
        return {"dr": Dr, "dt": Dt, "lap": Drr + Dr / rr + Dtt / rr**2}

    # ------------------------------------------------------------ low-order stencils

    @cached_property
    def stencil_operators(self) -> dict[str, sp.csr_matrix]:
        """Second-order finite differences on the same nodes (sparse).

        Three-point nonuniform stencil along the diameter in r, periodic
        three-point stencil in θ. Used only to precondition Krylov solves.
        """
        nr, nt = self.n_r, self.n_theta
        M = nr * nt
        j = np.arange(nt)
        rows, c_dr, c_drr, cols = [], [], [], []
        for i in range(nr - 1):
            r0 = self.radii[i]
            rl = self.radii[i - 1] if i > 0 else -r0
            rh = self.radii[i + 1]
            h1, h2 = r0 - rl, rh - r0
            a1 = (-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2)))
            a2 = (2 / (h1 * (h1 + h2)), -2 / (h1 * h2), 2 / (h2 * (h1 + h2)))
            left = (i - 1) * nt + j if i > 0 else (j + nt // 2) % nt
            for col, w1, w2 in zip((left, i * nt + j, (i + 1) * nt + j), a1, a2):
                rows.append(i * nt + j)
                cols.append(col)
                c_dr.append(np.full(nt, w1))
                c_drr.append(np.full(nt, w2))
        rows, cols = np.concatenate(rows), np.concatenate(cols)
        Dr = sp.csr_matrix((np.concatenate(c_dr), (rows, cols)), shape=(M, M))
        Drr = sp.csr_matrix((np.concatenate(c_drr), (rows, cols)), shape=(M, M))
        h = 2.0 * np.pi / nt
        e = np.ones(nt)
        T1 = sp.diags([e[:-1], -e[:-1], [1.0], [-1.0]], [1, -1, -(nt - 1), nt - 1], shape=(nt, nt)) / (2 * h)
        T2 = sp.diags([e[:-1], -2 * e, e[:-1], [1.0], [1.0]], [1, 0, -1, -(nt - 1), nt - 1], shape=(nt, nt)) / h**2
        Ir = sp.identity(nr)
        Dt = sp.kron(Ir, T1, format="csr")
        Dtt = sp.kron(Ir, T2, format="csr")
        inv_r = sp.diags(1.0 / np.repeat(self.radii, nt))
        return {"dr": Dr, "dt": Dt, "lap": (Drr + inv_r @ Dr + inv_r @ inv_r @ Dtt).tocsr()}
