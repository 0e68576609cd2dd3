"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

from . import harness
from .cluster import KMeansConfig, kmeans_elastic, silhouette
from .core import (
    ValidationError,
    check_intervals,
    clustering_from_anomalies,
    read_anomalies_jsonl,
    read_series_csv,
    with_clusters,
    write_anomalies_jsonl,
    write_series_csv,
)
from .elastic import distance_matrix, zero_pad
from .extmetrics import ari, fmi
from .saai import SaaiParams, evaluate
from .stats import mcm, mcm_to_csv, mcm_to_markdown
from .synthgen import ANOMALY_CLASSES, GenerationError, GeneratorConfig, generate

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

KIND_NAMES = {
    "increase-k": "increase_K",
    "increase-d": "increase_D",
    "decrease-rsync": "decrease_rsync",
    "lag-sweep": "lag_sweep",
    "ablation": "ablation",
    "lambda-sweep": "lambda_sweep",
}
METRIC_NAMES = {"saai": "full", "saai-p1": "p1", "saai-p2": "p2"}
METHOD_NAMES = {
    "saai": "SAAI",
    "saai-p1": "SAAI_p1",
    "saai-p2": "SAAI_p2",
    "ssc": "SSC",
    "ari": "ARI",
    "fmi": "FMI",
    "xmeans": "XMEANS",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _classes(text: str) -> tuple[int, ...]:
    names = {c.name.lower().replace(" ", "-"): i for i, c in enumerate(ANOMALY_CLASSES)}
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if tok.isdigit():
            out.append(int(tok))
        elif tok in names:
            out.append(names[tok])
        else:
            raise argparse.ArgumentTypeError(f"unknown class {tok!r}; use 0-5 or one of {sorted(names)}")
    return tuple(out)


def _values(text: str) -> tuple[float, ...]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    return tuple(int(v) if v.is_integer() else v for v in vals)


def _load(args):
    series = read_series_csv(args.series)
    anomalies = read_anomalies_jsonl(args.anomalies)
    check_intervals(anomalies, series)
    return series, anomalies


def cmd_generate(args) -> int:
    cfg = GeneratorConfig(
        n_days=args.days,
        n_dims=args.dims,
        classes=args.classes,
        r_sync=args.rsync,
        lag_minutes=args.lag,
        events_per_class=args.events_per_class,
        seed=args.seed,
    )
    series, anomalies = generate(cfg)
    write_series_csv(series, args.out_series)
    write_anomalies_jsonl(anomalies, args.out_anomalies)
    return EXIT_OK


def cmd_cluster(args) -> int:
    series, anomalies = _load(args)
    data = harness.prepare(series, anomalies)
    if args.k > len(data.seqs):
        raise ValidationError(f"k={args.k} exceeds the {len(data.seqs)} anomalies")
    dist = data.dtw if args.measure == "dtw" else distance_matrix(data.seqs, args.measure)
    result = kmeans_elastic(data.seqs, KMeansConfig(k=args.k, seed=args.seed), args.measure, dist=dist)
    labelled = with_clusters(data.anomalies, result.clustering(data.ids))
    write_anomalies_jsonl(labelled, args.out)
    return EXIT_OK


def cmd_score(args) -> int:
    series, anomalies = _load(args)
    clustering = clustering_from_anomalies(read_anomalies_jsonl(args.clustering))
    clustering.covers(anomalies)
    if args.metric in METRIC_NAMES:
        value = evaluate(anomalies, clustering, SaaiParams(args.lam, args.theta), METRIC_NAMES[args.metric]).value
    else:
        data = harness.prepare(series, anomalies)
        labels = [clustering.label(i) for i in data.ids]
        if args.metric == "ssc":
            value = silhouette(distance_matrix(zero_pad(data.seqs), "dtw"), labels)
        else:
            if (data.true_labels < 0).any():
                raise ValidationError(f"{args.metric} needs true_class on every anomaly")
            value = (ari if args.metric == "ari" else fmi)(data.true_labels, labels)
    print(repr(float(value)))
    return EXIT_OK


def cmd_select_k(args) -> int:
    if args.k_max <= args.k_min:
        raise UsageError("--k-max must exceed --k-min")
    series, anomalies = _load(args)
    k = harness.select_k(
        series, anomalies, METHOD_NAMES[args.method], (args.k_min, args.k_max),
        SaaiParams(args.lam, args.theta), args.seed,
    )
    print(k)
    return EXIT_OK


def cmd_experiment(args) -> int:
    spec = harness.ExperimentSpec(
        kind=KIND_NAMES[args.kind],
        trials_per_point=args.trials,
        seed=args.seed,
        values=args.values,
        events_per_class=args.events_per_class,
    )
    records = harness.run_experiment(spec, workers=args.workers)
    for path in harness.report(records, args.out_dir, args.format, args.plots):
        logging.getLogger(__name__).info("wrote %s", path)
    return EXIT_OK


def _accuracy_vectors(text: str) -> dict[str, list[float]]:
    header = next(csv.reader(io.StringIO(text)), [])
    if "accuracy" in header:
        return harness.accuracy_from_csv(text)
    if "correct" in header:
        return harness.method_vectors(harness.accuracy_table(harness.records_from_csv(text)))
    raise ValidationError("expected an accuracy.csv or records.csv file")


def cmd_mcm(args) -> int:
    vectors = _accuracy_vectors(Path(args.input).read_text(encoding="utf-8"))
    if not vectors:
        raise ValidationError("no results to compare")
    cells = mcm(vectors)
    text = mcm_to_markdown(cells) if args.format == "md" else mcm_to_csv(cells)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _add_io(p):
    p.add_argument("--series", required=True, help="series CSV")
    p.add_argument("--anomalies", required=True, help="anomaly JSONL")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="syncanom", description="Synchronized anomaly agreement toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="synthetic series with labelled anomalies")
    p.add_argument("--days", type=int, default=30)
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--classes", type=_classes, default=(0, 1, 2, 3), help="comma list of class ids or names")
    p.add_argument("--rsync", type=float, default=1.0)
    p.add_argument("--lag", type=int, default=0, help="lag of dims >= 1 in minutes")
    p.add_argument("--events-per-class", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-series", required=True)
    p.add_argument("--out-anomalies", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("cluster", help="elastic k-means of the anomalous subsequences")
    _add_io(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--measure", choices=("dtw", "msm"), default="dtw")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="anomaly JSONL with a cluster field")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("score", help="score a clustering")
    _add_io(p)
    p.add_argument("--clustering", required=True, help="JSONL with id and cluster per anomaly")
    p.add_argument("--metric", choices=("saai", "saai-p1", "saai-p2", "ssc", "ari", "fmi"), default="saai")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=0.5)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("select-k", help="number of clusters chosen by a method")
    _add_io(p)
    p.add_argument("--method", choices=tuple(METHOD_NAMES), default="saai")
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--k-max", type=int, default=20, help="exclusive upper bound")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_select_k)

    p = sub.add_parser("experiment", help="run a synthetic experiment sweep")
    p.add_argument("--kind", choices=tuple(KIND_NAMES), required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--values", type=_values, default=None, help="comma list overriding the swept values")
    p.add_argument("--events-per-class", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("csv", "md"), default="csv", help="MCM table format")
    p.add_argument("--plots", action="store_true", help="also write accuracy.svg")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("mcm", help="multi-comparison matrix from accuracy or records CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--format", choices=("csv", "md"), default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_mcm)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"syncanom: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, GenerationError, OSError, ValueError) as exc:
        print(f"syncanom: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
