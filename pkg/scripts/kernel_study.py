"""Singular values of the linearized conformality operator at (equator, id).

Prints the unconstrained spectrum (three rotation/Möbius directions in the
kernel), the constrained spectrum, and its agreement with the closed form.

Usage: python3 scripts/kernel_study.py [--m 8]
"""

import argparse
from dataclasses import dataclass

import numpy as np

from plateau_h3.curves import Reparametrization, equator
from plateau_h3.disk import DiskGrid
from plateau_h3.linearization import (
    ConformalityMap,
    assemble_operator,
    closed_form_operator,
    null_space_coefficients,
    principal_angles,
    spectrum,
    variation_basis,
)


@dataclass
class Config:
    m: int = 8
    n_theta: int = 48
    n_r: int = 12
    eps: float = 1e-2


def main(cfg: Config):
    grid = DiskGrid(cfg.n_theta, cfg.n_r)
    kmap = ConformalityMap(equator(), grid)
    base = kmap.solve(Reparametrization.identity(cfg.m))
    un = assemble_operator(equator(), base.u, variation_basis(cfg.m, False), base=base, kmap=kmap, method="fd")
    s = spectrum(un)
    print("unconstrained singular values / sigma_max:")
    print(np.array2string(s.singular_values / s.singular_values[0], precision=3))
    K = null_space_coefficients(un, 3)
    print(f"kernel dim {s.numeric_kernel_dim}, angle to span(e0,e1,e2) {principal_angles(K, np.eye(2 * cfg.m + 1)[:, :3]).max():.2e}")
    con = assemble_operator(equator(), base.u, variation_basis(cfg.m, True), base=base, kmap=kmap, method="fd")
    sc = spectrum(con)
    ref = closed_form_operator(cfg.m, cfg.eps, grid.eval_radius_value)
    print(f"constrained sigma_min/sigma_max {sc.sigma_min_ratio:.3e}, index {sc.index}")
    print(f"max |FD - closed form| / max|closed form| {np.abs(con.matrix - ref).max() / np.abs(ref).max():.2e}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--m", type=int, default=8)
    main(Config(m=ap.parse_args().m))
