"""Experiment protocol: cluster for every k, pick k per metric, score accuracy.

One trial generates a synthetic series, clusters its smoothed anomalous
subsequences with DTW k-means for each ``k`` in ``k_range`` and lets every
method choose a ``k``. The clusterings are shared by all methods of a trial,
so adding methods is cheap; only X-Means clusters on its own (MSM medoids).
"""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .cluster import KMeansConfig, kmeans_elastic, silhouette, xmeans
from .core import AnomalyInterval, ClusteringResult, MultivariateSeries, ValidationError, extract
from .elastic import distance_matrix, moving_average, zero_pad
from .extmetrics import ari, fmi, pearson
from .saai import SaaiParams, find_sync_pairs, score_pairs
from .stats import mcm, mcm_to_csv, mcm_to_markdown
from .synthgen import GeneratorConfig, generate, random_classes

log = logging.getLogger(__name__)

METHODS = ("SAAI", "SAAI_p1", "SAAI_p2", "SSC", "ARI", "FMI", "XMEANS")
KINDS = ("increase_K", "increase_D", "decrease_rsync", "lag_sweep", "ablation", "lambda_sweep")
LAMBDAS = tuple(round(0.1 * i, 1) for i in range(11))
SMOOTH_WINDOW = 5


def argmax_k(scores: Mapping[int, float]) -> int:
    """``k`` with the highest score; ties go to the smallest ``k``."""
    if not scores:
        raise ValidationError("no scores to choose from")
    best = max(scores.values())
    return min(k for k, v in scores.items() if v == best)


def lambda_method(lam: float) -> str:
    return f"SAAI@{lam:.1f}"


@dataclass
class TrialData:
    """Everything the methods need about one anomaly set."""

    ids: list[int]
    seqs: list[np.ndarray]
    true_labels: np.ndarray
    anomalies: list[AnomalyInterval]
    dtw: np.ndarray
    _padded_dtw: np.ndarray | None = None
    _pairs: dict = field(default_factory=dict)

    @property
    def padded_dtw(self) -> np.ndarray:
        if self._padded_dtw is None:
            self._padded_dtw = distance_matrix(zero_pad(self.seqs), "dtw")
        return self._padded_dtw

    def sync_pairs(self, theta: float) -> frozenset:
        if theta not in self._pairs:
            self._pairs[theta] = find_sync_pairs(self.anomalies, theta)
        return self._pairs[theta]


def prepare(
    series: MultivariateSeries, anomalies: Sequence[AnomalyInterval], window: int = SMOOTH_WINDOW
) -> TrialData:
    ordered = sorted(anomalies, key=lambda iv: iv.id)
    if not ordered:
        raise ValidationError("no anomalies to cluster")
    seqs = [moving_average(extract(series, iv), window) for iv in ordered]
    truth = np.array([-1 if iv.true_class is None else iv.true_class for iv in ordered])
    dtw = distance_matrix(seqs, "dtw") if len(seqs) > 1 else np.zeros((1, 1))
    return TrialData([iv.id for iv in ordered], seqs, truth, ordered, dtw)


def cluster_sweep(data: TrialData, k_range: tuple[int, int], seed: int) -> dict[int, np.ndarray]:
    """DTW k-means labels for each ``k`` in ``[k_lo, k_hi)`` not exceeding n."""
    k_lo, k_hi = k_range
    n = len(data.seqs)
    if n < k_lo:
        raise ValidationError(f"only {n} anomalies, fewer than k_lo={k_lo}")
    out = {}
    for k in range(k_lo, min(k_hi, n + 1)):
        cfg = KMeansConfig(k=k, seed=_derive(seed, k))
        out[k] = kmeans_elastic(data.seqs, cfg, "dtw", dist=data.dtw).labels
    return out


def _derive(seed: int, *key: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _scorer(method: str, data: TrialData, lam: float, theta: float) -> Callable[[np.ndarray], float]:
    if method.startswith("SAAI"):
        if "@" in method:
            variant, lam = "full", float(method.split("@")[1])
        else:
            variant = {"SAAI": "full", "SAAI_p1": "p1", "SAAI_p2": "p2"}[method]
        pairs = data.sync_pairs(theta)

        def score(labels):
            clustering = _clustering(data, labels)
            return score_pairs(pairs, clustering, lam, variant).value

        return score
    if method == "SSC":
        return lambda labels: silhouette(data.padded_dtw, labels) if len(set(labels.tolist())) > 1 else -1.0
    if method in ("ARI", "FMI") and np.any(data.true_labels < 0):
        raise ValidationError(f"{method} needs true_class on every anomaly")
    if method == "ARI":
        return lambda labels: ari(data.true_labels, labels)
    if method == "FMI":
        return lambda labels: fmi(data.true_labels, labels)
    raise ValidationError(f"unknown method {method!r}")


def _clustering(data: TrialData, labels) -> ClusteringResult:
    return ClusteringResult.from_labels(data.ids, labels.tolist())


def evaluate_trial(
    data: TrialData,
    methods: Iterable[str],
    k_range: tuple[int, int] = (2, 20),
    lam: float = 0.5,
    theta: float = 0.5,
    seed: int = 0,
) -> dict[str, tuple[int, dict[int, float]]]:
    """Selected k and the per-k score table for every method."""
    methods = list(methods)
    result: dict[str, tuple[int, dict[int, float]]] = {}
    sweep_methods = [m for m in methods if m not in ("XMEANS", "RANDOM")]
    if sweep_methods:
        sweep = cluster_sweep(data, k_range, seed)
        for m in sweep_methods:
            score = _scorer(m, data, lam, theta)
            table = {k: float(score(labels)) for k, labels in sweep.items()}
            result[m] = (argmax_k(table), table)
    if "XMEANS" in methods:
        k_lo, k_hi = k_range
        msm = distance_matrix(data.seqs, "msm")
        xm = xmeans(data.seqs, k_lo, min(k_hi - 1, len(data.seqs)), "msm", seed=_derive(seed, 999), dist=msm)
        result["XMEANS"] = (xm.k, {})
    if "RANDOM" in methods:
        rng = np.random.default_rng(_derive(seed, 998))
        result["RANDOM"] = (int(rng.integers(k_range[0], k_range[1])), {})
    return result


def select_k(
    series: MultivariateSeries,
    anomalies: Sequence[AnomalyInterval],
    method: str,
    k_range: tuple[int, int] = (2, 20),
    params: SaaiParams = SaaiParams(),
    seed: int = 0,
) -> int:
    """Number of clusters that maximizes ``method`` (or X-Means' own choice)."""
    data = prepare(series, anomalies)
    if len(data.seqs) < k_range[0]:
        raise ValidationError(f"only {len(data.seqs)} anomalies, fewer than k_lo={k_range[0]}")
    return evaluate_trial(data, [method], k_range, params.lam, params.theta, seed)[method][0]


# ---------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str = "increase_K"
    trials_per_point: int = 20
    k_range: tuple[int, int] = (2, 20)
    methods: tuple[str, ...] = METHODS
    seed: int = 0
    values: tuple | None = None
    n_days: int = 30
    events_per_class: int = 3
    lam: float = 0.5
    theta: float = 0.5
    rsync_range: tuple[float, float] = (0.5, 1.0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        if self.trials_per_point < 1:
            raise ValidationError("trials_per_point must be >= 1")
        if not 2 <= self.k_range[0] < self.k_range[1]:
            raise ValidationError(f"bad k_range {self.k_range}")
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.values is not None:
            object.__setattr__(self, "values", tuple(self.values))

    def swept_values(self) -> tuple:
        if self.values is not None:
            return self.values
        return DEFAULT_VALUES[self.kind]


DEFAULT_VALUES = {
    "increase_K": (2, 3, 4, 5, 6),
    "increase_D": (2, 3, 4, 5, 6, 7, 8, 9, 10),
    "decrease_rsync": tuple(round(0.1 * i, 1) for i in range(11)),  # 1 - r_sync
    "lag_sweep": tuple(range(-720, 721, 60)),
    "ablation": (2, 3, 4, 5, 6),
    "lambda_sweep": (2, 3, 4, 5, 6),
}


@dataclass(frozen=True)
class TrialRecord:
    kind: str
    value: float
    trial: int
    method: str
    selected_k: int
    true_K: int
    correct: bool
    error: str = ""

    def __post_init__(self):
        if self.correct != (self.selected_k == self.true_K):
            raise ValidationError("correct must equal (selected_k == true_K)")


RECORD_FIELDS = [f.name for f in fields(TrialRecord)]


def _value_key(value) -> int:
    # milli-units, wrapped to uint32 so negative lags are valid spawn keys
    return int(round(float(value) * 1000)) & 0xFFFFFFFF


def trial_config(spec: ExperimentSpec, value, trial: int) -> tuple[GeneratorConfig, int]:
    """Generator configuration and clustering seed of one trial.

    Seeds come from ``SeedSequence(spec.seed, spawn_key=(point, trial))`` where
    ``point`` encodes the swept value itself, so any point can be rerun on its
    own or inside a different sweep.
    """
    trial_seed = _derive(spec.seed, _value_key(value), trial)
    rng = np.random.default_rng(trial_seed)
    K, D, lag = 4, 2, 0
    r_sync = float(rng.uniform(*spec.rsync_range))
    if spec.kind == "increase_K":
        K = int(value)
    elif spec.kind == "increase_D":
        D = int(value)
    elif spec.kind == "decrease_rsync":
        r_sync = 1.0 - float(value)
    elif spec.kind == "lag_sweep":
        lag = int(value)
    else:
        K = int(value)
    classes = random_classes(K, rng)
    cfg = GeneratorConfig(
        n_days=spec.n_days,
        n_dims=D,
        classes=classes,
        r_sync=r_sync,
        lag_minutes=lag,
        events_per_class=spec.events_per_class,
        seed=_derive(trial_seed, 1),
    )
    return cfg, _derive(trial_seed, 2)


def _methods_for(spec: ExperimentSpec) -> list[str]:
    if spec.kind == "lambda_sweep":
        return [lambda_method(l) for l in LAMBDAS] + [m for m in spec.methods if not m.startswith("SAAI")]
    if spec.kind == "ablation":
        return ["SAAI", "SAAI_p1", "SAAI_p2"]
    return list(spec.methods)


def run_trial(spec: ExperimentSpec, value, trial: int) -> list[TrialRecord]:
    methods = _methods_for(spec)
    cfg, seed = trial_config(spec, value, trial)
    true_K = len(cfg.classes)
    try:
        series, anomalies = generate(cfg)
        data = prepare(series, anomalies)
        picks = evaluate_trial(data, methods, spec.k_range, spec.lam, spec.theta, seed)
    except Exception as exc:  # recorded, the sweep goes on
        log.warning("trial %s/%s/%s failed: %s", spec.kind, value, trial, exc)
        return [
            TrialRecord(spec.kind, value, trial, m, -1, true_K, False, f"{type(exc).__name__}: {exc}")
            for m in methods
        ]
    return [
        TrialRecord(spec.kind, value, trial, m, picks[m][0], true_K, picks[m][0] == true_K)
        for m in methods
    ]


def _run_unit(args):
    return run_trial(*args)


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> list[TrialRecord]:
    """All trials of ``spec``, ordered by (value, trial, method)."""
    units = [(spec, v, t) for v in spec.swept_values() for t in range(spec.trials_per_point)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_run_unit, units))
    else:
        chunks = []
        for u in units:
            chunks.append(_run_unit(u))
            log.info("%s value=%s trial=%s done", spec.kind, u[1], u[2])
    return [r for chunk in chunks for r in chunk]


def accuracy_table(records: Iterable[TrialRecord]) -> dict[tuple, dict[str, float]]:
    """Mean correctness per ``(kind, value)`` and method, in first-seen order."""
    sums: dict[tuple, dict[str, list[int]]] = {}
    for r in records:
        cell = sums.setdefault((r.kind, r.value), {}).setdefault(r.method, [0, 0])
        cell[0] += int(r.correct)
        cell[1] += 1
    return {key: {m: c / n for m, (c, n) in by_m.items()} for key, by_m in sums.items()}


def lambda_sweep(spec: ExperimentSpec, workers: int = 1) -> dict[float, float]:
    """Mean SAAI accuracy for each lambda in 0, 0.1, ..., 1."""
    spec = replace(spec, kind="lambda_sweep")
    records = run_experiment(spec, workers)
    out = {}
    for lam in LAMBDAS:
        hits = [r.correct for r in records if r.method == lambda_method(lam)]
        out[lam] = float(np.mean(hits)) if hits else float("nan")
    return out


# ---------------------------------------------------------------------------
# reports


def records_to_csv(records: Iterable[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        row = asdict(r)
        row["correct"] = int(r.correct)
        w.writerow([row[f] for f in RECORD_FIELDS])
    return buf.getvalue()


def records_from_csv(text: str) -> list[TrialRecord]:
    rows = csv.DictReader(io.StringIO(text))
    return [
        TrialRecord(
            kind=row["kind"],
            value=float(row["value"]),
            trial=int(row["trial"]),
            method=row["method"],
            selected_k=int(row["selected_k"]),
            true_K=int(row["true_K"]),
            correct=bool(int(row["correct"])),
            error=row.get("error", ""),
        )
        for row in rows
    ]


def accuracy_to_csv(table: Mapping[tuple, Mapping[str, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "value", "method", "accuracy"])
    for (kind, value), by_m in table.items():
        for m, acc in by_m.items():
            w.writerow([kind, value, m, f"{acc:.6f}"])
    return buf.getvalue()


def accuracy_from_csv(text: str) -> dict[str, list[float]]:
    """Method -> accuracy vector, paired over the (kind, value) points."""
    points: dict[tuple, dict[str, float]] = {}
    for row in csv.DictReader(io.StringIO(text)):
        points.setdefault((row["kind"], row["value"]), {})[row["method"]] = float(row["accuracy"])
    methods: list[str] = []
    for by_m in points.values():
        methods.extend(m for m in by_m if m not in methods)
    return {m: [by_m[m] for by_m in points.values() if m in by_m] for m in methods}


def method_vectors(table: Mapping[tuple, Mapping[str, float]]) -> dict[str, list[float]]:
    methods: list[str] = []
    for by_m in table.values():
        methods.extend(m for m in by_m if m not in methods)
    return {m: [by_m[m] for by_m in table.values() if m in by_m] for m in methods}


def correlation_table(vectors: Mapping[str, Sequence[float]], reference: str = "SAAI") -> dict[str, float]:
    """Pearson correlation of ``reference``'s accuracies with every other method."""
    out = {}
    if reference not in vectors:
        return out
    ref = vectors[reference]
    for m, v in vectors.items():
        if m == reference:
            continue
        try:
            out[m] = pearson(ref, v)
        except ValidationError:
            out[m] = float("nan")
    return out


def svg_line_plot(table: Mapping[tuple, Mapping[str, float]], title: str = "") -> str:
    """Accuracy against the swept value, one polyline per method."""
    xs = [float(v) for _, v in table]
    vectors = method_vectors(table)
    width, height, pad = 640, 360, 40
    x_lo, x_hi = (min(xs), max(xs)) if xs else (0.0, 1.0)
    span = (x_hi - x_lo) or 1.0
    colours = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
               "#7f7f7f", "#bcbd22", "#17becf", "#000000"]

    def px(x, y):
        return (pad + (x - x_lo) / span * (width - 2 * pad), height - pad - y * (height - 2 * pad))

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<text x="{width / 2}" y="20" text-anchor="middle">{title}</text>',
             f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
             'fill="none" stroke="#999"/>']
    for i, (m, accs) in enumerate(vectors.items()):
        colour = colours[i % len(colours)]
        pts = " ".join(f"{a:.1f},{b:.1f}" for a, b in (px(x, y) for x, y in zip(xs, accs)))
        parts.append(f'<polyline fill="none" stroke="{colour}" points="{pts}"/>')
        parts.append(f'<text x="{width - pad + 2}" y="{pad + 14 * i}" font-size="10" fill="{colour}">{m}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def report(
    records: Sequence[TrialRecord], out_dir: str | Path, fmt: str = "csv", plots: bool = False
) -> list[Path]:
    """Write records, accuracies, MCM and correlation tables to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name, text):
        p = out / name
        p.write_text(text, encoding="utf-8")
        written.append(p)

    table = accuracy_table(records)
    put("records.csv", records_to_csv(records))
    put("accuracy.csv", accuracy_to_csv(table))
    vectors = method_vectors(table)
    if vectors:
        cells = mcm(vectors)
        put("mcm.md" if fmt == "md" else "mcm.csv", mcm_to_markdown(cells) if fmt == "md" else mcm_to_csv(cells))
        corr = correlation_table(vectors)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "pearson_with_SAAI"])
        for m, r in corr.items():
            w.writerow([m, f"{r:.6f}"])
        put("correlation.csv", buf.getvalue())
    if plots and table:
        put("accuracy.svg", svg_line_plot(table, title=records[0].kind))
    return written
