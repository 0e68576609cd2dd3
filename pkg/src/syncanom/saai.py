"""Synchronized Anomaly Agreement Index.

The score rewards clusterings in which anomalies that occur at the same time
in different channels end up in the same cluster, regularized by the number
of clusters and the number of single-member clusters::

    saai = lam * |agreeing| / |synchronized| + (1 - lam) * (K - 1 - n_singleton) / K

Synchronized pairs are found with a sweep over interval start/end events.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

from .core import AnomalyInterval, ClusteringResult, SyncPairSet, ValidationError

_END, _START = 0, 1


class DegenerateInputWarning(UserWarning):
    """No synchronized pairs exist, so the agreement term was set to 0."""


@dataclass(frozen=True)
class SaaiParams:
    lam: float = 0.5
    theta: float = 0.5

    def __post_init__(self):
        for name in ("lam", "theta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class SaaiScore:
    """Breakdown of one SAAI evaluation."""

    value: float
    agreement: float
    penalty: float
    n_sync: int
    n_agree: int
    K: int
    n_singleton: int

    @property
    def degenerate(self) -> bool:
        return self.n_sync == 0


def overlap_ratio(a_i: int, b_i: int, a_j: int, b_j: int) -> float:
    """Intersection length over hull length of two intervals.

    Negative for disjoint intervals, 1.0 for identical ones.
    """
    if a_i >= b_i or a_j >= b_j:
        raise ValidationError(f"degenerate interval: ({a_i}, {b_i}), ({a_j}, {b_j})")
    return (min(b_i, b_j) - max(a_i, a_j)) / (max(b_i, b_j) - min(a_i, a_j))


def _pair(p: int, q: int) -> tuple[int, int]:
    return (p, q) if p < q else (q, p)


def find_sync_pairs(anomalies: Iterable[AnomalyInterval], theta: float) -> frozenset:
    """All cross-dimension pairs with overlap ratio >= ``theta`` (sweep-line).

    Events are ordered by time, END before START on ties. With ``theta == 0``
    intervals touching at a single index are synchronized (ratio 0), so START
    is processed first in that case to keep them comparable.
    """
    start_tag, end_tag = (_END, _START) if theta <= 0 else (_START, _END)
    events = []
    for iv in anomalies:
        events.append((iv.a, start_tag, iv.id, iv))
        events.append((iv.b, end_tag, iv.id, iv))
    events.sort(key=lambda e: (e[0], e[1], e[2]))

    active: dict[int, AnomalyInterval] = {}
    pairs = set()
    for _, tag, ident, iv in events:
        if tag == start_tag:
            for other in active.values():
                if other.dim == iv.dim:
                    continue
                if overlap_ratio(iv.a, iv.b, other.a, other.b) >= theta:
                    pairs.add(_pair(ident, other.id))
            active[ident] = iv
        else:
            del active[ident]
    return frozenset(pairs)


def find_sync_pairs_bruteforce(anomalies: Iterable[AnomalyInterval], theta: float) -> frozenset:
    """Quadratic reference: test every cross-dimension pair directly."""
    pairs = set()
    for p, q in combinations(list(anomalies), 2):
        if p.dim != q.dim and overlap_ratio(p.a, p.b, q.a, q.b) >= theta:
            pairs.add(_pair(p.id, q.id))
    return frozenset(pairs)


def agreeing_pairs(pairs: Iterable[tuple[int, int]], clustering: ClusteringResult) -> frozenset:
    labels = clustering.assignments
    return frozenset(pq for pq in pairs if labels[pq[0]] == labels[pq[1]])


def sync_pairs_sweepline(
    anomalies: Sequence[AnomalyInterval], clustering: ClusteringResult, theta: float
) -> SyncPairSet:
    clustering.covers(anomalies)
    pairs = find_sync_pairs(anomalies, theta)
    return SyncPairSet(pairs, agreeing_pairs(pairs, clustering))


def sync_pairs_bruteforce(
    anomalies: Sequence[AnomalyInterval], clustering: ClusteringResult, theta: float
) -> SyncPairSet:
    clustering.covers(anomalies)
    pairs = find_sync_pairs_bruteforce(anomalies, theta)
    return SyncPairSet(pairs, agreeing_pairs(pairs, clustering))


def _penalty_full(K: int, n1: int) -> float:
    # all-singleton clusterings give -1/K; clamp keeps the score in [0, 1]
    return max(0.0, (K - 1 - n1) / K)


def _penalty_p1(K: int, n1: int) -> float:
    return (K - 1) / K


def _penalty_p2(K: int, n1: int) -> float:
    return (K - n1) / K


PENALTIES = {"full": _penalty_full, "p1": _penalty_p1, "p2": _penalty_p2}


def score_pairs(
    pairs: frozenset,
    clustering: ClusteringResult,
    lam: float = 0.5,
    variant: str = "full",
) -> SaaiScore:
    """Score ``clustering`` given precomputed synchronized pairs.

    Synchronized pairs do not depend on the clustering, so K-selection loops
    compute them once and call this per candidate clustering.
    """
    if clustering.K == 0:
        raise ValidationError("no anomalies to score")
    n_sync = len(pairs)
    n_agree = len(agreeing_pairs(pairs, clustering))
    agreement = n_agree / n_sync if n_sync else 0.0
    penalty = PENALTIES[variant](clustering.K, clustering.n_singleton)
    value = lam * agreement + (1.0 - lam) * penalty
    return SaaiScore(value, agreement, penalty, n_sync, n_agree, clustering.K, clustering.n_singleton)


def evaluate(
    anomalies: Sequence[AnomalyInterval],
    clustering: ClusteringResult,
    params: SaaiParams = SaaiParams(),
    variant: str = "full",
) -> SaaiScore:
    if not anomalies:
        raise ValidationError("no anomalies to score")
    clustering.covers(anomalies)
    pairs = find_sync_pairs(anomalies, params.theta)
    return score_pairs(pairs, clustering, params.lam, variant)


def _scalar(anomalies, clustering, params, variant) -> float:
    result = evaluate(anomalies, clustering, params, variant)
    if result.degenerate:
        warnings.warn(
            "no synchronized pairs; agreement term set to 0", DegenerateInputWarning, stacklevel=3
        )
    return result.value


def saai(
    anomalies: Sequence[AnomalyInterval],
    clustering: ClusteringResult,
    params: SaaiParams = SaaiParams(),
) -> float:
    """SAAI of ``clustering``; warns with :class:`DegenerateInputWarning` if no pairs exist."""
    return _scalar(anomalies, clustering, params, "full")


def saai_p1(anomalies, clustering, params: SaaiParams = SaaiParams()) -> float:
    """Ablated score keeping only the ``(K - 1) / K`` penalty."""
    return _scalar(anomalies, clustering, params, "p1")


def saai_p2(anomalies, clustering, params: SaaiParams = SaaiParams()) -> float:
    """Ablated score keeping only the ``(K - n_singleton) / K`` penalty."""
    return _scalar(anomalies, clustering, params, "p2")
