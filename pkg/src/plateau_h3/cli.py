"""Command-line front end: solve | verify | spectrum | sweep | multistart | corpus.

Exit codes: 0 success, 1 usage error, 2 solver failure, 3 verification
failed, 4 I/O error. Errors are printed to stderr as a JSON object with
``error`` and ``kind`` fields.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .curves import CurveFamily, Reparametrization, curve_from_spec
from .errors import DegeneracyError, ParameterError, SolverError
from .io import (
    RunConfig,
    corpus_run,
    dumps,
    export_mesh,
    read_json,
    record_to_dict,
    verify_file,
    write_json,
    write_spectrum_csv,
)
from .linearization import assemble_operator, spectrum, variation_basis
from .plateau import continuation_sweep, multistart, solve_plateau

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_VERIFY, EXIT_IO = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _grid(text: str) -> tuple[int, int]:
    try:
        nr, nt = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"--grid must look like NRxNT (e.g. 32x96), got '{text}'") from None
    return nr, nt


def _curve(text: str) -> dict:
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"--curve is not valid JSON: {e}") from None
    if not isinstance(spec, dict):
        raise UsageError("--curve must be a JSON object")
    return spec


def _add_problem_args(p: argparse.ArgumentParser, curve_required: bool = True):
    p.add_argument("--curve", required=curve_required, help="curve JSON spec, or @file")
    p.add_argument("--grid", default="12x48", help="NRxNT, e.g. 32x96")
    p.add_argument("--eps", type=float, default=1e-2)
    p.add_argument("--m", type=int, default=8, dest="m_reparam", help="reparametrization mode cutoff")
    p.add_argument("--tension-tol", type=float, default=1e-8)
    p.add_argument("--conformality-tol", type=float, default=1e-6)
    p.add_argument("--newton-tol", type=float, default=1e-9)
    p.add_argument("--max-outer", type=int, default=50, help="outer Newton iteration cap")
    p.add_argument("--out-dir", default=".")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="plateau-h3", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    s = sub.add_parser("solve", help="Newton solve from the identity")
    _add_problem_args(s)
    s.add_argument("--out", default="solution.json")
    s.add_argument("--mesh", default=None, help="optional PLY output")
    v = sub.add_parser("verify", help="re-check a solution file")
    v.add_argument("solution")
    v.add_argument("--out-dir", default=".")
    v.add_argument("--out", default=None)
    sp = sub.add_parser("spectrum", help="singular values of the assembled linearization")
    _add_problem_args(sp)
    sp.add_argument("--reparam", default=None, help="solution JSON to read u from (default id)")
    sp.add_argument("--unconstrained", action="store_true")
    sp.add_argument("--out", default="spectrum.json")
    sp.add_argument("--csv", default=None, help="optional CSV of (index, singular_value)")
    sw = sub.add_parser("sweep", help="continuation along a straight path between two curves")
    _add_problem_args(sw)
    sw.add_argument("--to", required=True, help="target curve JSON spec")
    sw.add_argument("--steps", type=int, default=10)
    sw.add_argument("--out", default="sweep.json")
    ms = sub.add_parser("multistart", help="count distinct solutions from random seeds")
    _add_problem_args(ms)
    ms.add_argument("--seeds", type=int, default=20)
    ms.add_argument("--scale", type=float, default=0.1)
    ms.add_argument("--rng-seed", type=int, default=0)
    ms.add_argument("--out", default="multistart.json")
    c = sub.add_parser("corpus", help="solve, verify and multistart over the built-in corpus")
    _add_problem_args(c, curve_required=False)
    c.add_argument("--seeds", type=int, default=20)
    c.add_argument("--scale", type=float, default=0.1)
    c.add_argument("--rng-seed", type=int, default=0)
    c.add_argument("--adaptive", action="store_true", help="pick each curve's grid from the resolution ladder")
    return ap


def _config(args) -> RunConfig:
    nr, nt = _grid(args.grid)
    kw = dict(
        n_r=nr, n_theta=nt, eps=args.eps, m_reparam=args.m_reparam, tension_tol=args.tension_tol,
        conformality_tol=args.conformality_tol, newton_tol=args.newton_tol, max_outer=args.max_outer,
        out_dir=args.out_dir,
    )
    if getattr(args, "curve", None):
        kw["curve"] = _curve(args.curve)
    for name, key in (("seeds", "n_seeds"), ("scale", "seed_scale"), ("rng_seed", "rng_seed"), ("adaptive", "adaptive")):
        if hasattr(args, name):
            kw[key] = getattr(args, name)
    return RunConfig(**kw)


def _emit(obj, path: Path | None):
    if path is not None:
        write_json(obj, path)
    sys.stdout.write(dumps(obj))


def _cmd_solve(args) -> int:
    cfg = _config(args)
    problem = cfg.problem()
    rec = solve_plateau(problem)
    out = record_to_dict(rec, problem)
    _emit(out, cfg.path(args.out))
    if args.mesh:
        export_mesh(rec.disk, cfg.path(args.mesh), problem.grid)
    return EXIT_OK if rec.converged else EXIT_SOLVER


def _cmd_verify(args) -> int:
    report = verify_file(Path(args.out_dir) / args.solution if not Path(args.solution).is_absolute() else args.solution)
    _emit(report.to_dict(), Path(args.out_dir) / args.out if args.out else None)
    return EXIT_OK if report.passed else EXIT_VERIFY


def _cmd_spectrum(args) -> int:
    cfg = _config(args)
    problem = cfg.problem()
    u = problem.identity()
    if args.reparam:
        u = Reparametrization(np.asarray(read_json(cfg.path(args.reparam))["reparam_coeffs"], dtype=float))
    basis = variation_basis(problem.m_reparam, not args.unconstrained)
    opr = assemble_operator(problem.curve, u.with_modes(problem.m_reparam), basis, problem.fd_step,
                            problem.solver_config, problem.grid, method=problem.jacobian)
    rep = spectrum(opr)
    _emit(rep.to_dict(), cfg.path(args.out))
    if args.csv:
        write_spectrum_csv(rep, cfg.path(args.csv))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _config(args)
    problem = cfg.problem()
    target = curve_from_spec(_curve(args.to))
    family = CurveFamily.between(problem.curve, target)
    points = continuation_sweep(family, args.steps, problem)
    out = {
        "steps": [
            {
                "parameter": p.parameter,
                "error": p.error,
                "near_singular": p.near_singular,
                "conformality_sup": p.record.conformality_sup if p.record else None,
                "spectrum": p.spectrum.to_dict() if p.spectrum else None,
            }
            for p in points
        ]
    }
    _emit(out, cfg.path(args.out))
    return EXIT_OK if all(p.record is not None for p in points) else EXIT_SOLVER


def _cmd_multistart(args) -> int:
    cfg = _config(args)
    sset = multistart(cfg.problem(), cfg.n_seeds, cfg.seed_scale, cfg.rng_seed, cfg.clustering_radius)
    out = {
        "distinct_count": sset.distinct_count,
        "seeds_used": sset.seeds_used,
        "clustering_radius": sset.clustering_radius,
        "labels": sset.labels,
        "failures": {str(k): v for k, v in sset.failures.items()},
        "max_sobolev_norm": sset.max_sobolev_norm,
        "representatives": [r.reparam.fourier_coeffs for r in sset.representatives],
    }
    _emit(out, cfg.path(args.out))
    return EXIT_OK if sset.records else EXIT_SOLVER


def _cmd_corpus(args) -> int:
    cfg = _config(args)
    rows = corpus_run(cfg)
    _emit({"rows": [dict(zip(("curve", "error"), (r.curve, r.error))) for r in rows]}, None)
    return EXIT_OK if all(r.error is None for r in rows) else EXIT_SOLVER


COMMANDS = {
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "spectrum": _cmd_spectrum,
    "sweep": _cmd_sweep,
    "multistart": _cmd_multistart,
    "corpus": _cmd_corpus,
}


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": message, "kind": kind, "exit_code": code}) + "\n")
    return code


def run_command(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError(f"a subcommand is required: {' | '.join(COMMANDS)}")
        return COMMANDS[args.command](args)
    except UsageError as e:
        return _fail("usage", str(e), EXIT_USAGE)
    except ParameterError as e:
        return _fail("usage", str(e), EXIT_USAGE)
    except (SolverError, DegeneracyError) as e:
        return _fail(type(e).__name__, str(e), EXIT_SOLVER)
    except OSError as e:
        return _fail("io", str(e), EXIT_IO)


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
