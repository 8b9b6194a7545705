"""Newton solver for k(α, u) = 0, certification, multistart and continuation."""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .ball import BallIsometry
from .conformality import hopf_differential, holomorphy_residual, moment_report, trace_fourier
from .curves import (
    BoundaryCurve,
    CurveFamily,
    Reparametrization,
    compose_boundary,
    periodic_sobolev_norm,
    three_point_project,
)
from .disk import DiskGrid
from .errors import DegeneracyError, ParameterError, SingularityError, SolverError, StagnationError
from .harmonic import DAMPING_MIN, DiskMap, TensionReport
from .linearization import (
    BaseSolution,
    ConformalityMap,
    LinearizedOperator,
    SolverConfig,
    SpectrumReport,
    assemble_operator,
    constrained_basis_matrix,
    spectrum,
    variation_basis,
)

log = logging.getLogger(__name__)

SINGULAR_RATIO = 1e-8
MOMENT_RATIO = 1e-6
DEFAULT_R_CUT = 0.5


@dataclass(frozen=True)
class PlateauProblem:
    """A boundary curve together with every discretization and tolerance choice."""

    curve: BoundaryCurve
    grid: DiskGrid = field(default_factory=DiskGrid)
    eps: float = 1e-2
    tension_tol: float = 1e-8
    conformality_tol: float = 1e-6
    newton_tol: float = 1e-9
    m_reparam: int = 8
    fd_step: float = 1e-5
    isolation_tol: float = 1e-4
    max_outer: int = 50
    r_cut: float = DEFAULT_R_CUT
    frame: BallIsometry | None = None
    linear_solver: str = "auto"
    jacobian: str = "tangent"

    def __post_init__(self):
        if self.conformality_tol < 10 * self.tension_tol:
            raise ParameterError("conformality_tol must be at least 10x tension_tol")
        if self.m_reparam < 3:
            raise ParameterError("m_reparam must be >= 3")
        if 2 * self.m_reparam >= self.grid.n_theta:
            raise ParameterError("m_reparam too large for n_theta")
        if not 0 < self.r_cut <= self.grid.eval_radius_value:
            raise ParameterError("r_cut must lie in (0, eval radius]")
        if self.jacobian not in ("tangent", "fd"):
            raise ParameterError("jacobian must be 'tangent' or 'fd'")
        if self.max_outer < 1:
            raise ParameterError("max_outer must be >= 1")
        self.solver_config  # validates eps and tension_tol

    @property
    def solver_config(self) -> SolverConfig:
        return SolverConfig(self.eps, self.tension_tol, linear_solver=self.linear_solver, frame=self.frame)

    def conformality_map(self) -> ConformalityMap:
        return ConformalityMap(self.curve, self.grid, self.solver_config)

    def identity(self) -> Reparametrization:
        return Reparametrization.identity(self.m_reparam)


@dataclass
class SolutionRecord:
    reparam: Reparametrization
    disk: DiskMap
    conformality_sup: float
    sigma_min_ratio: float
    truncated_area: float
    newton_history: list[float]
    converged: bool = True
    tension: TensionReport | None = None
    moments: tuple[float, float, float] = (0.0, 0.0, 0.0)
    spectrum: SpectrumReport | None = None
    certificates: dict[str, bool] = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return all(self.certificates.values())


@dataclass
class SolutionSet:
    records: list[SolutionRecord]
    distinct_count: int
    clustering_radius: float
    seeds_used: int
    labels: list[int | None] = field(default_factory=list)
    failures: dict[int, str] = field(default_factory=dict)
    max_sobolev_norm: float = float("nan")

    @property
    def representatives(self) -> list[SolutionRecord]:
        seen, out = set(), []
        for rec, lab in zip(self.records, [l for l in self.labels if l is not None]):
            if lab not in seen:
                seen.add(lab)
                out.append(rec)
        return out


# ---------------------------------------------------------------- Newton iteration


class _NewtonState:
    """Current iterate with its harmonic extension, reused across steps."""

    def __init__(self, problem: PlateauProblem, u: Reparametrization):
        self.problem = problem
        self.kmap = problem.conformality_map()
        self.basis = variation_basis(problem.m_reparam, True)
        self.set_base(self.kmap.solve(u))
        self.operator: LinearizedOperator | None = None

    def set_base(self, base: BaseSolution):
        self.base = base
        self.rvec = self.residual_vector(base)
        self.rnorm = float(np.abs(self.rvec).max())

    def residual_vector(self, base: BaseSolution) -> np.ndarray:
        return trace_fourier(base.trace, self.problem.m_reparam)[3:]

    def assemble(self) -> LinearizedOperator:
        p = self.problem
        self.operator = assemble_operator(
            p.curve, self.base.u, self.basis, p.fd_step, base=self.base, kmap=self.kmap, method=p.jacobian
        )
        return self.operator

    def step(self) -> float:
        """One damped Newton step; returns the sup norm of the accepted update."""
        opr = self.assemble()
        rep = spectrum(opr)
        if rep.sigma_min_ratio < SINGULAR_RATIO:
            raise SingularityError(
                f"linearization is numerically singular (sigma_min ratio {rep.sigma_min_ratio:.2e})"
            )
        coef = np.linalg.solve(opr.matrix, -self.rvec)
        delta = opr.basis @ coef
        u = self.base.u
        damping = 1.0
        while damping >= DAMPING_MIN:
            try:
                trial_u = three_point_project(Reparametrization(u.fourier_coeffs + damping * delta))
                trial = self.kmap.solve(trial_u, near=self.base, chord=True)
            except (DegeneracyError, SolverError):
                damping *= 0.5
                continue
            rnorm = float(np.abs(self.residual_vector(trial)).max())
            if rnorm < self.rnorm:
                self.set_base(trial)
                return float(np.abs(damping * delta).max())
            damping *= 0.5
        raise StagnationError(f"Newton damping fell below {DAMPING_MIN:.1e} at residual {self.rnorm:.3e}")


def newton_step(problem: PlateauProblem, u: Reparametrization) -> tuple[Reparametrization, float]:
    """u⁺ = Π(u − d·(D_u k)⁻¹ k(α, u)) with backtracking on the Z-projected residual.

    Returns the new reparametrization and its residual norm.
    """
    state = _NewtonState(problem, u)
    state.step()
    return state.base.u, state.rnorm


def truncated_area(disk: DiskMap, grid: DiskGrid, r_cut: float = DEFAULT_R_CUT, n_quad: int | None = None) -> float:
    """Hyperbolic area of the image of the disk r ≤ r_cut.

    The map is interpolated spectrally to Gauss–Legendre radii in [0, r_cut]
    and the area element λ²|φ_r × φ_θ| is integrated there.
    """
    if not 0 < r_cut <= grid.eval_radius_value:
        raise ParameterError("r_cut must lie in (0, eval radius]")
    n_quad = n_quad or max(16, 2 * grid.n_r)
    x, w = np.polynomial.legendre.leggauss(n_quad)
    q = 0.5 * r_cut * (x + 1.0)
    w = 0.5 * r_cut * w
    F = disk.components
    P = grid.interpolate_radius(F, q)
    Pr = grid.interpolate_radius(grid.dr(F), q, parity=-1)
    Pt = grid.dt(P)
    lam2 = (2.0 / (1.0 - np.sum(P * P, axis=0))) ** 2
    dens = lam2 * np.linalg.norm(np.cross(Pr, Pt, axis=0), axis=0)
    return float(w @ grid.theta_integral(dens))


def _certify(problem: PlateauProblem, state: _NewtonState, history, converged, reuse_operator) -> SolutionRecord:
    grid = problem.grid
    base = state.base
    opr = state.operator if reuse_operator and state.operator is not None else state.assemble()
    rep = spectrum(opr)
    k = base.trace
    mom = moment_report(k)
    ksup = k.sup
    certificates = {
        "tension": base.report.sup_residual < problem.tension_tol,
        "conformality": ksup < problem.conformality_tol,
        "moments": mom.sup < MOMENT_RATIO * (1.0 + ksup),
        "sigma_min": rep.sigma_min_ratio > problem.isolation_tol,
    }
    return SolutionRecord(
        reparam=base.u,
        disk=base.disk,
        conformality_sup=ksup,
        sigma_min_ratio=rep.sigma_min_ratio,
        truncated_area=truncated_area(base.disk, grid, problem.r_cut),
        newton_history=list(history),
        converged=converged,
        tension=base.report,
        moments=mom.as_tuple(),
        spectrum=rep,
        certificates=certificates,
    )


def solve_plateau(problem: PlateauProblem, u0: Reparametrization | None = None) -> SolutionRecord:
    """Newton iteration to ``newton_tol`` on the Z-projected residual, then certification.

    Raises SingularityError or StagnationError from the steps; hitting
    ``max_outer`` returns a record with ``converged=False``.
    """
    u0 = problem.identity() if u0 is None else three_point_project(u0.with_modes(problem.m_reparam))
    state = _NewtonState(problem, u0)
    history = [state.rnorm]
    last_step = np.inf
    converged = state.rnorm <= problem.newton_tol
    for _ in range(problem.max_outer):
        if converged:
            break
        last_step = state.step()
        history.append(state.rnorm)
        converged = state.rnorm <= problem.newton_tol
    # The last operator was assembled one tiny step earlier; reuse it when the
    # step is far below the clustering scale.
    return _certify(problem, state, history, converged, reuse_operator=last_step < 1e-7)


# ---------------------------------------------------------------- multistart


def seed_reparametrizations(m: int, n_seeds: int, seed_scale: float, rng_seed: int) -> list[Reparametrization]:
    """Identity followed by random three-point-projected perturbations.

    Mode-j coefficients are uniform in [−s, s]/j², so that every seed with
    s ≤ 0.25 stays a diffeomorphism.
    """
    rng = np.random.default_rng(rng_seed)
    seeds = [Reparametrization.identity(m)]
    j = np.r_[1.0, np.repeat(np.arange(1, m + 1), 2)]
    for _ in range(n_seeds - 1):
        c = rng.uniform(-seed_scale, seed_scale, 2 * m + 1) / j**2
        try:
            seeds.append(three_point_project(Reparametrization(c)))
        except DegeneracyError:
            seeds.append(None)
    return seeds


def cluster_labels(coeffs: list[np.ndarray], radius: float) -> list[int]:
    """Single-linkage clusters under the coefficient sup-norm distance."""
    n = len(coeffs)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if np.abs(coeffs[i] - coeffs[j]).max() <= radius:
                parent[find(j)] = find(i)
    roots, labels = {}, []
    for i in range(n):
        labels.append(roots.setdefault(find(i), len(roots)))
    return labels


def _solve_seed(args):
    problem, u = args
    try:
        rec = solve_plateau(problem, u)
    except (SolverError, DegeneracyError) as e:
        return None, f"{type(e).__name__}: {e}"
    if not rec.converged:
        return None, "NonConvergence: max outer iterations reached"
    return rec, None


def worker_count(requested: int | None = None) -> int:
    env = os.environ.get("PLATEAU_THREADS")
    cap = int(env) if env and env.isdigit() and int(env) > 0 else 1
    return min(cap, requested) if requested else cap


def multistart(
    problem: PlateauProblem,
    n_seeds: int = 20,
    seed_scale: float = 0.1,
    rng_seed: int = 0,
    clustering_radius: float = 1e-3,
    workers: int | None = None,
) -> SolutionSet:
    """Solve from ``n_seeds`` starts and count distinct solutions.

    Results are merged by seed index, so the outcome does not depend on the
    number of workers. The first n seeds of a larger run are the seeds of
    the n-seed run.
    """
    if n_seeds < 1:
        raise ParameterError("n_seeds must be >= 1")
    seeds = seed_reparametrizations(problem.m_reparam, n_seeds, seed_scale, rng_seed)
    jobs = [(problem, u) for u in seeds if u is not None]
    nw = worker_count(workers)
    if nw > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=nw) as ex:
            results = list(ex.map(_solve_seed, jobs))
    else:
        results = [_solve_seed(j) for j in jobs]
    return _collect(problem, seeds, results, clustering_radius)


def _collect(problem, seeds, results, clustering_radius) -> SolutionSet:
    failures, records, owners = {}, [], []
    it = iter(results)
    for i, u in enumerate(seeds):
        if u is None:
            failures[i] = "DegeneracyError: seed is not monotone after projection"
            continue
        rec, err = next(it)
        if rec is None:
            failures[i] = err
        else:
            records.append(rec)
            owners.append(i)
    labels_conv = cluster_labels([r.reparam.fourier_coeffs for r in records], clustering_radius)
    labels: list[int | None] = [None] * len(seeds)
    for i, lab in zip(owners, labels_conv):
        labels[i] = lab
    norms = [
        periodic_sobolev_norm(compose_boundary(problem.curve, r.reparam, problem.grid.n_theta))
        for r in records
    ]
    return SolutionSet(
        records=records,
        distinct_count=len(set(labels_conv)),
        clustering_radius=clustering_radius,
        seeds_used=len(seeds),
        labels=labels,
        failures=failures,
        max_sobolev_norm=max(norms) if norms else float("nan"),
    )


def prefix(solution_set: SolutionSet, problem: PlateauProblem, n_seeds: int) -> SolutionSet:
    """The SolutionSet an ``n_seeds`` run with the same rng_seed would return."""
    keep = [i for i in range(min(n_seeds, solution_set.seeds_used))]
    recs_by_seed = {}
    k = 0
    for i, lab in enumerate(solution_set.labels):
        if lab is not None:
            recs_by_seed[i] = solution_set.records[k]
            k += 1
    records = [recs_by_seed[i] for i in keep if i in recs_by_seed]
    labels_conv = cluster_labels([r.reparam.fourier_coeffs for r in records], solution_set.clustering_radius)
    labels: list[int | None] = [None] * len(keep)
    it = iter(labels_conv)
    for i in keep:
        if i in recs_by_seed:
            labels[i] = next(it)
    norms = [
        periodic_sobolev_norm(compose_boundary(problem.curve, r.reparam, problem.grid.n_theta)) for r in records
    ]
    return SolutionSet(
        records=records,
        distinct_count=len(set(labels_conv)),
        clustering_radius=solution_set.clustering_radius,
        seeds_used=len(keep),
        labels=labels,
        failures={i: e for i, e in solution_set.failures.items() if i < n_seeds},
        max_sobolev_norm=max(norms) if norms else float("nan"),
    )


# ---------------------------------------------------------------- continuation


@dataclass
class SweepPoint:
    parameter: float
    record: SolutionRecord | None
    spectrum: SpectrumReport | None
    near_singular: bool = False
    error: str | None = None


def continuation_sweep(
    family: CurveFamily,
    steps: int,
    template: PlateauProblem,
    u0: Reparametrization | None = None,
    reverse: bool = False,
) -> list[SweepPoint]:
    """Solve along ``steps`` equally spaced parameters, seeding each solve with
    the previous solution. A failed step is retried once from the midpoint
    of the interval; if that fails too the point is recorded as a gap."""
    if steps < 2:
        raise ParameterError("steps must be >= 2")
    lo, hi = family.parameter_range
    params = np.linspace(lo, hi, steps)
    if reverse:
        params = params[::-1]
    u = template.identity() if u0 is None else u0
    prev_t = None
    out = []
    for t in params:
        prob = replace(template, curve=family.member(float(t)))
        try:
            rec = solve_plateau(prob, u)
            if not rec.converged:
                raise SolverError("max outer iterations reached")
        except (SolverError, DegeneracyError) as first:
            rec = None
            if prev_t is not None:
                mid = 0.5 * (prev_t + t)
                try:
                    mid_rec = solve_plateau(replace(template, curve=family.member(float(mid))), u)
                    rec = solve_plateau(prob, mid_rec.reparam)
                    if not rec.converged:
                        rec = None
                except (SolverError, DegeneracyError):
                    rec = None
            if rec is None:
                out.append(SweepPoint(float(t), None, None, False, f"{type(first).__name__}: {first}"))
                continue
        near = rec.sigma_min_ratio < template.isolation_tol
        out.append(SweepPoint(float(t), rec, rec.spectrum, near))
        u, prev_t = rec.reparam, t
    return out


# ---------------------------------------------------------------- resolution ladder

# (n_r, n_theta, m_reparam), coarse to fine.
DEFAULT_LADDER = ((12, 48, 8), (16, 96, 12), (24, 192, 12), (32, 192, 16))


def resolution_problem(template: PlateauProblem, level: tuple[int, int, int]) -> PlateauProblem:
    n_r, n_theta, m = level
    return replace(template, grid=DiskGrid(n_theta, n_r), m_reparam=m)


def solve_adaptive(
    template: PlateauProblem, ladder=DEFAULT_LADDER
) -> tuple[PlateauProblem, SolutionRecord]:
    """Climb ``ladder`` until a converged solution passes the moment certificate.

    The moments of k vanish for every u when the harmonic extension is
    resolved, so their size measures discretization error independently of
    how far k itself is from zero. Returns the last level tried if none passes.
    """
    if not ladder:
        raise ParameterError("ladder must be non-empty")
    out = None
    for level in ladder:
        prob = resolution_problem(template, level)
        try:
            rec = solve_plateau(prob)
        except (SolverError, DegeneracyError) as e:
            log.info("level %s failed: %s", level, e)
            continue
        out = (prob, rec)
        if rec.converged and rec.certificates.get("moments", False):
            return out
    if out is None:
        raise SolverError("no ladder level produced a solution")
    return out


def isolation_trials(
    problem: PlateauProblem,
    record: SolutionRecord,
    n_trials: int = 10,
    size: float = 1e-3,
    rng_seed: int = 0,
    clustering_radius: float = 1e-3,
) -> list[bool]:
    """Re-solve from u* + δ for random constrained δ with sup |δ| = ``size``;
    each entry says whether the solve returned within ``clustering_radius``."""
    rng = np.random.default_rng(rng_seed)
    B = constrained_basis_matrix(problem.m_reparam)
    base = record.reparam.fourier_coeffs
    out = []
    for _ in range(n_trials):
        d = B @ rng.standard_normal(B.shape[1])
        d *= size / np.abs(d).max()
        try:
            rec = solve_plateau(problem, Reparametrization(base + d))
        except (SolverError, DegeneracyError):
            out.append(False)
            continue
        out.append(rec.converged and np.abs(rec.reparam.fourier_coeffs - base).max() <= clustering_radius)
    return out


# ---------------------------------------------------------------- corpus survey


@dataclass
class CurveSurvey:
    """Everything the corpus study records for one curve."""

    problem: PlateauProblem
    record: SolutionRecord
    solutions: SolutionSet
    half: SolutionSet
    isolation: list[bool]
    seconds: dict[str, float]


def survey_curve(
    template: PlateauProblem,
    n_seeds: int = 40,
    n_trials: int = 10,
    ladder=DEFAULT_LADDER,
    seed_scale: float = 0.1,
    rng_seed: int = 0,
    clustering_radius: float = 1e-3,
) -> CurveSurvey:
    """Adaptive solve, ``n_seeds`` multistart (with its half-size prefix) and
    ``n_trials`` isolation re-solves (skipped when ``n_trials`` is 0)."""
    t0 = time.perf_counter()
    problem, record = solve_adaptive(template, ladder)
    t1 = time.perf_counter()
    sset = multistart(problem, n_seeds, seed_scale, rng_seed, clustering_radius)
    half = prefix(sset, problem, n_seeds // 2)
    t2 = time.perf_counter()
    trials = isolation_trials(problem, record, n_trials, rng_seed=rng_seed, clustering_radius=clustering_radius) if n_trials else []
    t3 = time.perf_counter()
    return CurveSurvey(problem, record, sset, half, trials, {"adaptive": t1 - t0, "multistart": t2 - t1, "isolation": t3 - t2})
