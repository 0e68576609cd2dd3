"""Run every experiment kind and write reports under one directory.

    python3 scripts/run_all.py --out results --trials 20 --workers 4
"""

import argparse
import logging
import time
from pathlib import Path

from syncanom.harness import KINDS, ExperimentSpec, accuracy_table, report, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--kinds", default=",".join(KINDS), help="comma list of kinds")
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)
    for kind in args.kinds.split(","):
        t0 = time.perf_counter()
        spec = ExperimentSpec(kind=kind, trials_per_point=args.trials, seed=args.seed)
        records = run_experiment(spec, workers=args.workers)
        report(records, Path(args.out) / kind, "md", plots=True)
        print(f"## {kind} ({time.perf_counter() - t0:.0f} s)")
        for (_, value), accs in accuracy_table(records).items():
            print(f"{value!s:>6}  " + "  ".join(f"{m}={a:.2f}" for m, a in accs.items()))


if __name__ == "__main__":
    main()
