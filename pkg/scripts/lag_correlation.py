"""Pearson correlation between the two anomaly-free channels as a function of lag.

    python3 scripts/lag_correlation.py --seeds 5
"""

import argparse

import numpy as np

from syncanom.extmetrics import pearson
from syncanom.synthgen import GeneratorConfig, generate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--step", type=int, default=60, help="lag step in minutes")
    args = ap.parse_args()
    print("lag_minutes,rho_mean,rho_min,rho_max")
    for lag in range(-720, 721, args.step):
        rhos = []
        for seed in range(args.seeds):
            series, _ = generate(GeneratorConfig(lag_minutes=lag, events_per_class=0, seed=seed))
            rhos.append(pearson(series.values[:, 0], series.values[:, 1]))
        print(f"{lag},{np.mean(rhos):.4f},{min(rhos):.4f},{max(rhos):.4f}")


if __name__ == "__main__":
    main()
