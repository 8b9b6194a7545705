"""Run configuration, JSON reports, verification and PLY mesh export."""

from __future__ import annotations

import csv
import io as _io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .conformality import HopfField, holomorphy_residual, hopf_differential, moment_report
from .curves import BoundaryCurve, Reparametrization, corpus, curve_from_spec, curve_label, curve_to_spec
from .disk import DiskGrid
from .errors import ParameterError, SolverError
from .harmonic import DiskMap
from .linearization import ConformalityMap, assemble_operator, spectrum, variation_basis
from .plateau import DEFAULT_LADDER, MOMENT_RATIO, PlateauProblem, SolutionRecord, multistart, prefix, solve_adaptive

FLOAT_FORMAT = ".17g"


# ---------------------------------------------------------------- JSON


def _encode(obj) -> str:
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, FLOAT_FORMAT) if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_encode(v) for v in (obj.tolist() if isinstance(obj, np.ndarray) else obj)) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON with every float written to 17 significant digits (bitwise reproducible)."""
    return _encode(obj) + "\n"


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def problem_to_dict(problem: PlateauProblem) -> dict:
    return {
        "curve": curve_to_spec(problem.curve),
        "grid": {"n_r": problem.grid.n_r, "n_theta": problem.grid.n_theta},
        "eps": problem.eps,
        "tolerances": {
            "tension": problem.tension_tol,
            "conformality": problem.conformality_tol,
            "newton": problem.newton_tol,
            "isolation": problem.isolation_tol,
        },
        "m_reparam": problem.m_reparam,
        "fd_step": problem.fd_step,
        "r_cut": problem.r_cut,
    }


def record_to_dict(record: SolutionRecord, problem: PlateauProblem) -> dict:
    d = problem_to_dict(problem)
    d.update(
        reparam_coeffs=record.reparam.fourier_coeffs,
        conformality_sup=record.conformality_sup,
        sigma_min_ratio=record.sigma_min_ratio,
        truncated_area=record.truncated_area,
        newton_history=record.newton_history,
        converged=record.converged,
        moments=list(record.moments),
        tension_sup=record.tension.sup_residual if record.tension else None,
        certificates=record.certificates,
    )
    return d


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ParameterError(f"{where}: missing field '{key}'")
    return d[key]


def problem_from_dict(d: dict) -> PlateauProblem:
    grid = _require(d, "grid", "solution")
    tol = d.get("tolerances", {})
    return PlateauProblem(
        curve=curve_from_spec(_require(d, "curve", "solution")),
        grid=DiskGrid(int(_require(grid, "n_theta", "grid")), int(_require(grid, "n_r", "grid"))),
        eps=float(_require(d, "eps", "solution")),
        tension_tol=float(tol.get("tension", 1e-8)),
        conformality_tol=float(tol.get("conformality", 1e-6)),
        newton_tol=float(tol.get("newton", 1e-9)),
        isolation_tol=float(tol.get("isolation", 1e-4)),
        m_reparam=int(d.get("m_reparam", 8)),
        fd_step=float(d.get("fd_step", 1e-5)),
        r_cut=float(d.get("r_cut", 0.5)),
    )


# ---------------------------------------------------------------- verification


@dataclass
class VerificationReport:
    tension_sup: float
    tension_l2: float
    conformality_sup: float
    moments: tuple[float, float, float]
    holomorphy_residual: float
    spectrum: dict
    certificates: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.certificates.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["moments"] = list(self.moments)
        d["passed"] = self.passed
        return d


def verify_solution(problem: PlateauProblem, u: Reparametrization) -> VerificationReport:
    """Re-solve the harmonic extension at u and recompute every certificate."""
    kmap = ConformalityMap(problem.curve, problem.grid, problem.solver_config)
    base = kmap.solve(u.with_modes(problem.m_reparam))
    opr = assemble_operator(
        problem.curve, base.u, variation_basis(problem.m_reparam, True), problem.fd_step,
        base=base, kmap=kmap, method=problem.jacobian,
    )
    rep = spectrum(opr)
    mom = moment_report(base.trace)
    ksup = base.trace.sup
    Q = hopf_differential(base.disk, problem.grid)
    return VerificationReport(
        tension_sup=base.report.sup_residual,
        tension_l2=base.report.l2_residual,
        conformality_sup=ksup,
        moments=mom.as_tuple(),
        holomorphy_residual=holomorphy_residual(Q, problem.grid),
        spectrum=rep.to_dict(),
        certificates={
            "tension": base.report.sup_residual < problem.tension_tol,
            "conformality": ksup < problem.conformality_tol,
            "moments": mom.sup < MOMENT_RATIO * (1.0 + ksup),
            "sigma_min": rep.sigma_min_ratio > problem.isolation_tol,
        },
    )


def verify_file(path) -> VerificationReport:
    d = read_json(path)
    problem = problem_from_dict(d)
    u = Reparametrization(np.asarray(_require(d, "reparam_coeffs", "solution"), dtype=float))
    return verify_solution(problem, u)


# ---------------------------------------------------------------- mesh


def mesh_arrays(disk: DiskMap, grid: DiskGrid) -> tuple[np.ndarray, np.ndarray]:
    """Vertices (center first, then rings r-major θ-minor) and triangle indices."""
    nr, nt = grid.n_r, grid.n_theta
    center = grid.center_value(disk.components)
    verts = np.vstack([center[None, :], disk.values.reshape(-1, 3)])
    j = np.arange(nt)
    jn = (j + 1) % nt
    faces = [np.stack([np.zeros(nt, int), 1 + j, 1 + jn], axis=1)]
    for i in range(nr - 1):
        a, b = 1 + i * nt + j, 1 + i * nt + jn
        c, d = a + nt, b + nt
        faces += [np.stack([a, c, d], axis=1), np.stack([a, d, b], axis=1)]
    return verts, np.vstack(faces)


def export_mesh(disk: DiskMap, path, grid: DiskGrid | None = None) -> Path:
    """ASCII PLY of the polar grid: a center fan plus quad-split rings."""
    if grid is None:
        nr, nt = disk.values.shape[:2]
        grid = DiskGrid(nt, nr)
    verts, faces = mesh_arrays(disk, grid)
    buf = _io.StringIO()
    buf.write("ply\nformat ascii 1.0\n")
    buf.write(f"element vertex {len(verts)}\nproperty double x\nproperty double y\nproperty double z\n")
    buf.write(f"element face {len(faces)}\nproperty list uchar int vertex_indices\nend_header\n")
    for v in verts:
        buf.write(" ".join(format(float(c), FLOAT_FORMAT) for c in v) + "\n")
    for f in faces:
        buf.write("3 " + " ".join(str(int(i)) for i in f) + "\n")
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def read_ply(path) -> tuple[np.ndarray, np.ndarray]:
    lines = Path(path).read_text().splitlines()
    nv = nf = 0
    k = 0
    for k, line in enumerate(lines):
        tok = line.split()
        if tok[:2] == ["element", "vertex"]:
            nv = int(tok[2])
        elif tok[:2] == ["element", "face"]:
            nf = int(tok[2])
        elif tok == ["end_header"]:
            break
    body = lines[k + 1 :]
    verts = np.array([[float(x) for x in body[i].split()] for i in range(nv)])
    faces = np.array([[int(x) for x in body[nv + i].split()[1:]] for i in range(nf)], dtype=int)
    return verts, faces


# ---------------------------------------------------------------- run configuration


@dataclass
class RunConfig:
    curve: dict = field(default_factory=lambda: {"type": "equator"})
    n_r: int = 12
    n_theta: int = 48
    eps: float = 1e-2
    tension_tol: float = 1e-8
    conformality_tol: float = 1e-6
    newton_tol: float = 1e-9
    isolation_tol: float = 1e-4
    m_reparam: int = 8
    max_outer: int = 50
    n_seeds: int = 20
    seed_scale: float = 0.1
    rng_seed: int = 0
    clustering_radius: float = 1e-3
    adaptive: bool = False
    out_dir: str = "."

    def __post_init__(self):
        for name in ("n_r", "n_theta", "m_reparam", "max_outer", "n_seeds", "rng_seed"):
            if not isinstance(getattr(self, name), (int, np.integer)):
                raise ParameterError(f"{name} must be an integer")
        if self.n_seeds < 1:
            raise ParameterError("n_seeds must be >= 1")
        if self.seed_scale < 0:
            raise ParameterError("seed_scale must be >= 0")
        if self.clustering_radius <= 0:
            raise ParameterError("clustering_radius must be positive")
        self.problem()

    def grid(self) -> DiskGrid:
        return DiskGrid(self.n_theta, self.n_r)

    def problem(self, curve: BoundaryCurve | None = None) -> PlateauProblem:
        return PlateauProblem(
            curve=curve if curve is not None else curve_from_spec(self.curve),
            grid=self.grid(),
            eps=self.eps,
            tension_tol=self.tension_tol,
            conformality_tol=self.conformality_tol,
            newton_tol=self.newton_tol,
            isolation_tol=self.isolation_tol,
            m_reparam=self.m_reparam,
            max_outer=self.max_outer,
        )

    def path(self, name: str) -> Path:
        return Path(self.out_dir) / name


CSV_FIELDS = ("curve", "conformality_sup", "sigma_min_ratio", "distinct_count", "truncated_area")


@dataclass
class CorpusRow:
    curve: str
    record: SolutionRecord | None
    solution_set: object | None
    error: str | None = None
    problem: PlateauProblem | None = None

    def csv_row(self) -> list[str]:
        if self.record is None:
            return [self.curve, "nan", "nan", "0", "nan"]
        r = self.record
        return [
            self.curve,
            format(r.conformality_sup, FLOAT_FORMAT),
            format(r.sigma_min_ratio, FLOAT_FORMAT),
            str(self.solution_set.distinct_count if self.solution_set else 0),
            format(r.truncated_area, FLOAT_FORMAT),
        ]


def corpus_run(config: RunConfig, curves: list[BoundaryCurve] | None = None, write: bool = True) -> list[CorpusRow]:
    """solve + verify + spectrum + multistart for each corpus curve.

    Writes ``<label>.json`` per curve and ``summary.csv`` under ``out_dir``.
    Failures are recorded in the row and the run continues.
    """
    rows = []
    for curve in curves if curves is not None else corpus():
        label = curve_label(curve_to_spec(curve))
        problem = config.problem(curve)
        try:
            if config.adaptive:
                problem, _ = solve_adaptive(problem, DEFAULT_LADDER)
            sset = multistart(problem, config.n_seeds, config.seed_scale, config.rng_seed, config.clustering_radius)
        except (SolverError, ParameterError) as e:
            rows.append(CorpusRow(label, None, None, str(e)))
            continue
        rec = sset.records[0] if sset.records else None
        row = CorpusRow(label, rec, sset, None if rec else "no seed converged", problem)
        rows.append(row)
        if write and rec is not None:
            d = record_to_dict(rec, problem)
            d["spectrum"] = rec.spectrum.to_dict()
            d["distinct_count"] = sset.distinct_count
            d["failures"] = {str(k): v for k, v in sset.failures.items()}
            write_json(d, config.path(f"{label}.json"))
    if write:
        write_summary(rows, config.path("summary.csv"))
    return rows


def write_spectrum_csv(report, path) -> Path:
    """Singular values as CSV rows (index, singular_value), largest first."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(("index", "singular_value"))
        for i, s in enumerate(report.singular_values):
            w.writerow((i, format(float(s), FLOAT_FORMAT)))
    return path


def write_summary(rows: list[CorpusRow], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for row in rows:
            w.writerow(row.csv_row())
    return path


__all__ = [
    "RunConfig",
    "VerificationReport",
    "CorpusRow",
    "corpus_run",
    "dumps",
    "export_mesh",
    "write_spectrum_csv",
    "mesh_arrays",
    "prefix",
    "problem_from_dict",
    "problem_to_dict",
    "read_json",
    "read_ply",
    "record_to_dict",
    "verify_file",
    "verify_solution",
    "write_json",
    "write_summary",
]
