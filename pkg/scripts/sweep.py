"""Continuation from the equator to a wavy curve, printing index and σ_min per step.

Usage: python3 scripts/sweep.py [--amplitude 0.3] [--frequency 3] [--steps 10]
"""

import argparse

from plateau_h3.curves import CurveFamily, equator, wavy
from plateau_h3.plateau import PlateauProblem, continuation_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--amplitude", type=float, default=0.3)
    ap.add_argument("--frequency", type=int, default=3)
    ap.add_argument("--steps", type=int, default=10)
    args = ap.parse_args()
    family = CurveFamily.between(equator(), wavy(args.amplitude, args.frequency))
    print("t       index  sigma_ratio  sup|k|     area")
    for p in continuation_sweep(family, args.steps, PlateauProblem(equator())):
        if p.record is None:
            print(f"{p.parameter:.3f}  gap: {p.error}")
            continue
        r = p.record
        print(f"{p.parameter:.3f}  {p.spectrum.index!s:>5}  {r.sigma_min_ratio:.3e}    {r.conformality_sup:.2e}  {r.truncated_area:.6f}")


if __name__ == "__main__":
    main()
