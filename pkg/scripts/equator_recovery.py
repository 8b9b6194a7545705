"""Recover the flat equatorial disk at several grids and report errors and timings.

Usage: python3 scripts/equator_recovery.py
"""

import time
from dataclasses import dataclass

import numpy as np

from plateau_h3.curves import equator
from plateau_h3.disk import DiskGrid
from plateau_h3.plateau import PlateauProblem, solve_plateau


@dataclass
class Config:
    grids: tuple = ((48, 12), (96, 24), (192, 32), (192, 64))
    eps: float = 1e-2


def main(cfg: Config = Config()):
    print("grid        sup|k|     sup|x3|    sigma_ratio  seconds")
    for nt, nr in cfg.grids:
        t0 = time.perf_counter()
        rec = solve_plateau(PlateauProblem(equator(), DiskGrid(nt, nr), eps=cfg.eps))
        dt = time.perf_counter() - t0
        dev = np.abs(rec.disk.values[..., 2]).max()
        print(f"{nr:>3}x{nt:<6} {rec.conformality_sup:.2e}  {dev:.2e}  {rec.sigma_min_ratio:.3e}    {dt:.1f}")


if __name__ == "__main__":
    main()
