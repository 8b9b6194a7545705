"""Grid refinement of the wavy(0.3, 3) solution: sup|k|, moments and holomorphy residual.

Usage: python3 scripts/grid_refinement.py
"""

from dataclasses import dataclass

from plateau_h3.conformality import holomorphy_residual, hopf_differential
from plateau_h3.curves import wavy
from plateau_h3.disk import DiskGrid
from plateau_h3.plateau import PlateauProblem, solve_plateau


@dataclass
class Config:
    amplitude: float = 0.3
    frequency: int = 3
    grids: tuple = ((48, 12), (96, 24), (96, 32), (192, 32), (192, 64))
    m_reparam: int = 8


def main(cfg: Config = Config()):
    curve = wavy(cfg.amplitude, cfg.frequency)
    print("grid       sup|k|     max|moment|  holomorphy  u mode 6 (cos, sin)")
    for nt, nr in cfg.grids:
        grid = DiskGrid(nt, nr)
        rec = solve_plateau(PlateauProblem(curve, grid, m_reparam=cfg.m_reparam))
        hol = holomorphy_residual(hopf_differential(rec.disk, grid), grid)
        c = rec.reparam.fourier_coeffs
        print(f"{nr:>3}x{nt:<5} {rec.conformality_sup:.3e}  {max(map(abs, rec.moments)):.2e}    {hol:.2e}    {c[11]:+.6e} {c[12]:+.6e}")


if __name__ == "__main__":
    main()
