"""Domain types and file formats shared across the package.

All value objects are frozen after construction. Interval bounds are
inclusive on both ends, so an interval ``[a, b]`` covers ``b - a + 1`` samples.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np


class ValidationError(ValueError):
    """Raised when a domain object violates one of its invariants."""


@dataclass(frozen=True, eq=False)
class MultivariateSeries:
    """Equidistant multivariate series; row ``n`` is sampled at ``start_time + n * step``."""

    values: np.ndarray
    start_time: int = 0
    step: int = 1

    def __post_init__(self):
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.ndim == 1:
            arr = arr[:, None]
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        validate_series(self)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_dims(self) -> int:
        return self.values.shape[1]

    @property
    def timestamps(self) -> np.ndarray:
        return self.start_time + self.step * np.arange(self.n_samples, dtype=np.int64)

    def __eq__(self, other):
        if not isinstance(other, MultivariateSeries):
            return NotImplemented
        return (
            self.start_time == other.start_time
            and self.step == other.step
            and self.values.shape == other.values.shape
            and bool(np.array_equal(self.values, other.values))
        )

    __hash__ = None


def validate_series(series: MultivariateSeries) -> None:
    """Raise :class:`ValidationError` describing the first violated invariant."""
    values = np.asarray(series.values)
    if values.ndim != 2:
        raise ValidationError(f"values must be 2-D (N x D), got ndim={values.ndim}")
    n, d = values.shape
    if n < 2:
        raise ValidationError(f"length < 2 (N={n})")
    if d < 1:
        raise ValidationError("no dimensions (D=0)")
    if not isinstance(series.step, (int, np.integer)) or series.step <= 0:
        raise ValidationError(f"step must be a positive integer, got {series.step!r}")
    if not isinstance(series.start_time, (int, np.integer)):
        raise ValidationError(f"start_time must be an integer, got {series.start_time!r}")
    bad = ~np.isfinite(values)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise ValidationError(f"non-finite value at row {row}, column {col}")


@dataclass(frozen=True)
class AnomalyInterval:
    """A univariate anomalous subsequence ``[a, b]`` in dimension ``dim``."""

    id: int
    dim: int
    a: int
    b: int
    true_class: int | None = None
    cluster: int | None = None

    def __post_init__(self):
        if self.dim < 0:
            raise ValidationError(f"interval {self.id}: negative dim {self.dim}")
        if not 0 <= self.a < self.b:
            raise ValidationError(
                f"interval {self.id}: need 0 <= a < b, got a={self.a}, b={self.b}"
            )

    @property
    def length(self) -> int:
        return self.b - self.a + 1

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "dim": self.dim,
            "a": self.a,
            "b": self.b,
            "true_class": self.true_class,
            "cluster": self.cluster,
        }


def check_intervals(anomalies: Iterable[AnomalyInterval], series: MultivariateSeries) -> None:
    """Check that every interval fits inside ``series`` and ids are unique."""
    seen = set()
    for iv in anomalies:
        if iv.id in seen:
            raise ValidationError(f"duplicate interval id {iv.id}")
        seen.add(iv.id)
        if iv.dim >= series.n_dims:
            raise ValidationError(f"interval {iv.id}: dim {iv.dim} >= D={series.n_dims}")
        if iv.b > series.n_samples - 1:
            raise ValidationError(
                f"interval {iv.id}: b={iv.b} beyond last index {series.n_samples - 1}"
            )


def assign_ids(anomalies: Iterable[AnomalyInterval]) -> list[AnomalyInterval]:
    """Renumber intervals 0..n-1 in ``(dim, a, b)`` order."""
    ordered = sorted(anomalies, key=lambda iv: (iv.dim, iv.a, iv.b))
    return [replace(iv, id=i) for i, iv in enumerate(ordered)]


def extract(series: MultivariateSeries, interval: AnomalyInterval) -> np.ndarray:
    """Values of ``series`` covered by ``interval`` (inclusive bounds)."""
    return np.array(series.values[interval.a : interval.b + 1, interval.dim])


@dataclass(frozen=True)
class ClusteringResult:
    """Cluster labels per interval id; ``K`` counts non-empty clusters only."""

    assignments: Mapping[int, int]
    K: int = field(init=False)
    n_singleton: int = field(init=False)

    def __post_init__(self):
        frozen = MappingProxyType({int(k): int(v) for k, v in dict(self.assignments).items()})
        object.__setattr__(self, "assignments", frozen)
        sizes = Counter(frozen.values())
        object.__setattr__(self, "K", len(sizes))
        object.__setattr__(self, "n_singleton", sum(1 for s in sizes.values() if s == 1))

    @classmethod
    def from_labels(cls, ids: Sequence[int], labels: Sequence[int]) -> ClusteringResult:
        if len(ids) != len(labels):
            raise ValidationError("ids and labels differ in length")
        return cls(dict(zip((int(i) for i in ids), (int(c) for c in labels))))

    def label(self, interval_id: int) -> int:
        return self.assignments[interval_id]

    def covers(self, anomalies: Iterable[AnomalyInterval]) -> None:
        ids = {iv.id for iv in anomalies}
        missing = ids - set(self.assignments)
        if missing:
            raise ValidationError(f"clustering has no label for ids {sorted(missing)[:5]}")

    def __hash__(self):
        return hash(tuple(sorted(self.assignments.items())))

    def __eq__(self, other):
        if not isinstance(other, ClusteringResult):
            return NotImplemented
        return dict(self.assignments) == dict(other.assignments)


@dataclass(frozen=True)
class SyncPairSet:
    """Synchronized pairs and the subset whose members share a cluster.

    Pairs are stored as ``(smaller_id, larger_id)`` tuples.
    """

    sync_pairs: frozenset = frozenset()
    agreeing_pairs: frozenset = frozenset()

    def __post_init__(self):
        if not self.agreeing_pairs <= self.sync_pairs:
            raise ValidationError("agreeing pairs must be a subset of sync pairs")


# ---------------------------------------------------------------------------
# file formats


def write_series_csv(series: MultivariateSeries, path: str | Path) -> None:
    Path(path).write_text(series_to_csv(series), encoding="utf-8")


def series_to_csv(series: MultivariateSeries) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["timestamp"] + [f"dim_{d}" for d in range(series.n_dims)])
    for t, row in zip(series.timestamps.tolist(), series.values.tolist()):
        writer.writerow([t] + [repr(v) for v in row])
    return buf.getvalue()


def read_series_csv(path: str | Path) -> MultivariateSeries:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "timestamp":
            raise ValidationError(f"{path}: header must start with 'timestamp'")
        expected = [f"dim_{d}" for d in range(len(header) - 1)]
        if header[1:] != expected:
            raise ValidationError(f"{path}: dimension columns must be {expected}")
        times, rows = [], []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise ValidationError(f"{path}:{lineno}: expected {len(header)} fields")
            times.append(int(rec[0]))
            rows.append([float(v) for v in rec[1:]])
    if len(times) < 2:
        raise ValidationError(f"{path}: length < 2 (N={len(times)})")
    steps = np.diff(times)
    if not np.all(steps == steps[0]):
        bad = int(np.argmax(steps != steps[0])) + 1
        raise ValidationError(f"{path}: row {bad} breaks the constant step")
    return MultivariateSeries(np.array(rows), start_time=times[0], step=int(steps[0]))


def write_anomalies_jsonl(anomalies: Iterable[AnomalyInterval], path: str | Path) -> None:
    lines = [json.dumps(iv.to_dict()) for iv in anomalies]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_anomalies_jsonl(path: str | Path) -> list[AnomalyInterval]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(
                    AnomalyInterval(
                        id=int(rec["id"]),
                        dim=int(rec["dim"]),
                        a=int(rec["a"]),
                        b=int(rec["b"]),
                        true_class=rec.get("true_class"),
                        cluster=rec.get("cluster"),
                    )
                )
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise ValidationError(f"{path}:{lineno}: malformed interval ({exc})") from exc
    return out


def clustering_from_anomalies(anomalies: Iterable[AnomalyInterval]) -> ClusteringResult:
    """Build a clustering from the ``cluster`` field of each interval."""
    labels = {}
    for iv in anomalies:
        if iv.cluster is None:
            raise ValidationError(f"interval {iv.id} has no cluster label")
        labels[iv.id] = iv.cluster
    return ClusteringResult(labels)


def with_clusters(
    anomalies: Iterable[AnomalyInterval], clustering: ClusteringResult
) -> list[AnomalyInterval]:
    return [replace(iv, cluster=clustering.label(iv.id)) for iv in anomalies]
