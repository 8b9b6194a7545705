"""Corpus study: adaptive resolution, 40-seed multistart (20-seed prefix), isolation trials.

Usage: python3 scripts/run_corpus.py [--out-dir runs/corpus] [--seeds 40] [--trials 10]
"""

import argparse
import time
from pathlib import Path

from plateau_h3.curves import corpus, curve_label, curve_to_spec
from plateau_h3.io import dumps, record_to_dict
from plateau_h3.plateau import PlateauProblem, survey_curve


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="runs/corpus")
    ap.add_argument("--seeds", type=int, default=40)
    ap.add_argument("--trials", type=int, default=10)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t_all = time.time()
    for curve in corpus():
        spec = curve_to_spec(curve)
        label = curve_label(spec)
        s = survey_curve(PlateauProblem(curve), args.seeds, args.trials if spec["type"] == "wavy" else 0)
        worst = max(max(abs(m) for m in r.moments) / (1 + r.conformality_sup) for r in s.solutions.records)
        row = record_to_dict(s.record, s.problem)
        row.update(
            label=label,
            distinct_count=s.solutions.distinct_count,
            distinct_count_half=s.half.distinct_count,
            failures={str(k): v for k, v in s.solutions.failures.items()},
            max_moment_ratio=worst,
            min_sigma_ratio=min(r.sigma_min_ratio for r in s.solutions.records),
            isolation_returns=sum(s.isolation),
            seconds=s.seconds,
        )
        (out / f"{label}.json").write_text(dumps(row))
        t = s.seconds
        print(f"{label} {s.problem.grid} m={s.problem.m_reparam} distinct {s.solutions.distinct_count}/"
              f"{s.half.distinct_count} failures {len(s.solutions.failures)} sigma {row['min_sigma_ratio']:.2e} "
              f"moment/(1+k) {worst:.1e} isolation {sum(s.isolation)}/{len(s.isolation)} "
              f"t {t['adaptive']:.0f}/{t['multistart']:.0f}/{t['isolation']:.0f} s", flush=True)
    print(f"total {time.time() - t_all:.0f} s")


if __name__ == "__main__":
    main()
