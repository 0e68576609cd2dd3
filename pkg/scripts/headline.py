"""Default setting (D=2, K=4, r_sync in [0.5, 1]): accuracy per method and the MCM.

    python3 scripts/headline.py --trials 20 --seed 0
"""

import argparse

from syncanom.harness import ExperimentSpec, run_experiment
from syncanom.stats import mcm, mcm_to_markdown


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    spec = ExperimentSpec(kind="increase_K", values=(4,), trials_per_point=args.trials, seed=args.seed)
    records = run_experiment(spec, workers=args.workers)
    # per-trial correctness as the paired vectors of the comparison matrix
    vectors: dict[str, list[float]] = {}
    for r in records:
        vectors.setdefault(r.method, []).append(float(r.correct))
    for m, v in vectors.items():
        print(f"{m:8s} accuracy {sum(v) / len(v):.2f}")
    print()
    print(mcm_to_markdown(mcm(vectors)), end="")


if __name__ == "__main__":
    main()
