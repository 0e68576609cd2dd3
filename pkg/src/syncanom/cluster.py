"""Elastic k-means, X-Means and the silhouette score.

DTW k-means updates centroids with DTW barycenter averaging (DBA). MSM has no
averaging operator, so MSM k-means keeps medoid centroids and runs entirely
on a precomputed distance matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .core import ClusteringResult, ValidationError
from .elastic import _dtw_cost, _dtw_path, as_sequence, distance_matrix


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    max_iter: int = 50
    n_init: int = 3
    dba_iter: int = 10
    tol: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("k", "max_iter", "n_init", "dba_iter"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.tol < 0:
            raise ValidationError("tol must be >= 0")


@dataclass
class KMeansResult:
    labels: np.ndarray
    inertia: float
    centroids: list
    n_iter: int
    inertia_history: list = field(default_factory=list)

    def clustering(self, ids: Sequence[int] | None = None) -> ClusteringResult:
        ids = range(len(self.labels)) if ids is None else ids
        return ClusteringResult.from_labels(list(ids), self.labels.tolist())


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _pairwise(seqs, measure: str, c: float = 1.0) -> np.ndarray:
    return distance_matrix(seqs, measure, c)


def kmeanspp_init(
    seqs: Sequence,
    k: int,
    measure: str = "dtw",
    seed: int = 0,
    dist: np.ndarray | None = None,
) -> list[int]:
    """Pick ``k`` distinct seed indices with D^2 weighting.

    ``dist`` may hold the precomputed pairwise matrix; otherwise it is built
    with ``measure``.
    """
    n = len(seqs)
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of sequences ({n})")
    if k < 1:
        raise ValidationError("k must be >= 1")
    rng = _rng(seed) if not isinstance(seed, np.random.Generator) else seed
    if dist is None:
        dist = _pairwise(seqs, measure) if n > 1 else np.zeros((1, 1))
    chosen = [int(rng.integers(n))]
    closest = dist[chosen[0]] ** 2
    while len(chosen) < k:
        weights = closest.copy()
        weights[chosen] = 0.0
        total = weights.sum()
        if total <= 0:
            # only duplicates of chosen points remain
            free = np.setdiff1d(np.arange(n), chosen)
            nxt = int(free[rng.integers(free.size)])
        else:
            nxt = int(rng.choice(n, p=weights / total))
        chosen.append(nxt)
        closest = np.minimum(closest, dist[nxt] ** 2)
    return chosen


@njit(cache=True)
def _dba_step(avg, flat, offsets):
    sums = np.zeros(avg.shape[0])
    counts = np.zeros(avg.shape[0])
    for s in range(offsets.shape[0] - 1):
        member = flat[offsets[s] : offsets[s + 1]]
        pi, pj = _dtw_path(avg, member)
        for k in range(pi.shape[0]):
            sums[pi[k]] += member[pj[k]]
            counts[pi[k]] += 1.0
    return sums / counts


def _pack(members):
    offsets = np.zeros(len(members) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([m.size for m in members])
    return np.concatenate(members), offsets


def dba_cost(members, avg) -> float:
    """Sum of squared DTW distances from ``members`` to ``avg``."""
    avg = as_sequence(avg)
    return float(sum(_dtw_cost(avg, as_sequence(m)) for m in members))


def dba(members: Sequence, init, iters: int = 10) -> np.ndarray:
    """DTW barycenter averaging starting from ``init``; keeps ``init``'s length.

    Stops early once an update no longer lowers the summed squared DTW cost,
    so the returned average never costs more than ``init``.
    """
    if len(members) == 0:
        raise ValidationError("dba needs at least one member")
    arrs = [as_sequence(m) for m in members]
    flat, offsets = _pack(arrs)
    avg = as_sequence(init).copy()
    cost = dba_cost(arrs, avg)
    for _ in range(iters):
        candidate = _dba_step(avg, flat, offsets)
        new_cost = dba_cost(arrs, candidate)
        if new_cost >= cost:
            break
        avg, cost = candidate, new_cost
    return avg


def _assign(d2: np.ndarray, k: int):
    """Nearest-centroid labels plus ``(cluster, point)`` reseeds for empty clusters.

    An empty cluster is reseeded with the point farthest from its own
    centroid; the caller must move that cluster's centroid onto the point.
    ``d2`` is updated in place so the reseeded point costs 0.
    """
    labels = np.argmin(d2, axis=1)
    reseeded = []
    for c in range(k):
        if not np.any(labels == c):
            own = d2[np.arange(len(labels)), labels]
            sizes = np.bincount(labels, minlength=k)
            own = np.where(sizes[labels] > 1, own, -1.0)
            far = int(np.argmax(own))
            labels[far] = c
            d2[far, c] = 0.0
            reseeded.append((c, far))
    return labels, reseeded


def _lloyd_dtw(arrs, start: list[int], cfg: KMeansConfig, init_d2=None):
    k = len(start)
    centroids = [arrs[i].copy() for i in start]
    history = []
    labels = prev = None
    for it in range(1, cfg.max_iter + 1):
        if it == 1 and init_d2 is not None:
            d2 = init_d2[:, start].copy()
        else:
            d2 = np.array([[_dtw_cost(x, c) for c in centroids] for x in arrs])
        labels, reseeded = _assign(d2, k)
        for c, i in reseeded:
            centroids[c] = arrs[i].copy()
        inertia = float(d2[np.arange(len(arrs)), labels].sum())
        history.append(inertia)
        if prev is not None and (
            np.array_equal(labels, prev) or history[-2] - inertia <= cfg.tol * history[-2]
        ):
            break
        prev = labels
        for c in range(k):
            members = [arrs[i] for i in np.flatnonzero(labels == c)]
            centroids[c] = dba(members, centroids[c], cfg.dba_iter)
    return labels, history[-1], centroids, it, history


def _medoid(d2: np.ndarray, members: np.ndarray) -> int:
    sub = d2[np.ix_(members, members)].sum(axis=1)
    return int(members[int(np.argmin(sub))])


def _lloyd_medoid(d2: np.ndarray, start: list[int], cfg: KMeansConfig):
    k = len(start)
    medoids = list(start)
    history = []
    prev = None
    for it in range(1, cfg.max_iter + 1):
        labels, reseeded = _assign(d2[:, medoids], k)
        for c, i in reseeded:
            medoids[c] = i
        inertia = float(d2[np.arange(d2.shape[0]), np.asarray(medoids)[labels]].sum())
        history.append(inertia)
        if prev is not None and (
            np.array_equal(labels, prev) or history[-2] - inertia <= cfg.tol * history[-2]
        ):
            break
        prev = labels
        medoids = [_medoid(d2, np.flatnonzero(labels == c)) for c in range(k)]
    return labels, history[-1], medoids, it, history


def kmeans_elastic(
    seqs: Sequence,
    config: KMeansConfig,
    measure: str = "dtw",
    dist: np.ndarray | None = None,
    c: float = 1.0,
) -> KMeansResult:
    """Lloyd k-means under an elastic measure, best of ``n_init`` restarts.

    Inertia is the sum of squared member-to-centroid distances. ``dist`` is an
    optional precomputed pairwise matrix for ``measure``.
    """
    if len(seqs) == 0:
        raise ValidationError("kmeans needs at least one sequence")
    arrs = [as_sequence(s) for s in seqs]
    n = len(arrs)
    if config.k > n:
        raise ValidationError(f"k={config.k} exceeds the number of sequences ({n})")
    if measure not in ("dtw", "msm"):
        raise ValidationError(f"kmeans supports dtw or msm, got {measure!r}")
    if dist is None:
        dist = _pairwise(arrs, measure, c) if n > 1 else np.zeros((1, 1))
    d2 = dist**2

    best = None
    children = np.random.SeedSequence(config.seed).spawn(config.n_init)
    for child in children:
        rng = _rng(child)
        start = kmeanspp_init(arrs, config.k, measure, rng, dist=dist)
        if measure == "dtw":
            labels, inertia, cents, n_iter, hist = _lloyd_dtw(arrs, start, config, d2)
        else:
            labels, inertia, meds, n_iter, hist = _lloyd_medoid(d2, start, config)
            cents = [arrs[m] for m in meds]
        if best is None or inertia < best.inertia:
            best = KMeansResult(labels.astype(int), inertia, cents, n_iter, hist)
    return best


def silhouette(dist: np.ndarray, labels: Sequence[int]) -> float:
    """Mean silhouette over points of a precomputed distance matrix.

    Members of single-element clusters score 0, as do points with ``a == b == 0``.
    """
    dist = np.asarray(dist, dtype=float)
    labels = np.asarray(labels)
    uniq, inv = np.unique(labels, return_inverse=True)
    if uniq.size < 2:
        raise ValidationError("silhouette undefined for K=1")
    n = labels.size
    sizes = np.bincount(inv)
    # per-cluster distance sums, shape (n, K)
    sums = np.zeros((n, uniq.size))
    for c in range(uniq.size):
        sums[:, c] = dist[:, inv == c].sum(axis=1)
    own = sizes[inv]
    a = np.where(own > 1, sums[np.arange(n), inv] / np.maximum(own - 1, 1), 0.0)
    means = sums / sizes
    means[np.arange(n), inv] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    s = np.where((own > 1) & (denom > 0), (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
    return float(s.mean())


# ---------------------------------------------------------------------------
# X-Means


def bic_score(d2_by_cluster: Sequence[np.ndarray]) -> float:
    """BIC of spherical Gaussians in distance space (larger is better).

    Each element of ``d2_by_cluster`` holds squared member-to-centroid
    distances of one cluster. The variance is pooled over the model and each
    cluster costs two free parameters (centre proxy and variance).
    """
    sizes = np.array([len(d) for d in d2_by_cluster], dtype=float)
    R = sizes.sum()
    K = len(d2_by_cluster)
    if R <= K:
        return -math.inf
    sse = float(sum(np.sum(d) for d in d2_by_cluster))
    if sse <= 0:
        return math.inf
    var = sse / (R - K)
    loglik = float(np.sum(sizes * np.log(sizes / R))) - 0.5 * R * math.log(2 * math.pi * var) - 0.5 * (R - K)
    return loglik - 0.5 * (2 * K) * math.log(R)


@dataclass
class XMeansResult:
    labels: np.ndarray
    k: int
    at_floor: bool
    at_ceiling: bool
    history: list = field(default_factory=list)

    def clustering(self, ids: Sequence[int] | None = None) -> ClusteringResult:
        ids = range(len(self.labels)) if ids is None else ids
        return ClusteringResult.from_labels(list(ids), self.labels.tolist())


def xmeans(
    seqs: Sequence,
    k_min: int = 2,
    k_max: int = 20,
    measure: str = "msm",
    seed: int = 0,
    c: float = 1.0,
    dist: np.ndarray | None = None,
) -> XMeansResult:
    """X-Means with medoid centroids on an elastic distance matrix.

    Starts from ``k_min`` clusters and tries a local 2-split of every cluster,
    keeping a split when its BIC beats the unsplit cluster's. After each
    round the accepted centres are refined by global k-medoids. Stops when no
    split is accepted or ``k_max`` is reached.
    """
    arrs = [as_sequence(s) for s in seqs]
    n = len(arrs)
    if k_min < 2:
        raise ValidationError("k_min must be >= 2")
    k_max = min(k_max, n)
    if k_min > k_max:
        raise ValidationError(f"k_min={k_min} exceeds k_max={k_max}")
    if dist is None:
        dist = _pairwise(arrs, measure, c)
    d2 = dist**2
    seeds = iter(np.random.SeedSequence(seed).spawn(4 * n + 4))

    cfg = KMeansConfig(k=k_min)
    labels, medoids = _kmedoids(d2, dist, k_min, next(seeds))
    history = [len(medoids)]

    while len(medoids) < k_max:
        new_centres = []
        budget = k_max - len(medoids)
        for cl, centre in enumerate(medoids):
            members = np.flatnonzero(labels == cl)
            split = None
            if budget > 0 and members.size >= 2:
                split = _try_split(d2, members, centre, next(seeds))
            if split is not None:
                new_centres.extend(split)
                budget -= 1
            else:
                new_centres.append(centre)
        if len(new_centres) == len(medoids):
            break
        labels, _, medoids, _, _ = _lloyd_medoid(d2, new_centres, cfg)
        history.append(len(medoids))

    k = len(np.unique(labels))
    return XMeansResult(labels.astype(int), k, k == k_min, k == k_max, history)


def _kmedoids(d2, dist, k, ss, n_init=3):
    best = None
    for child in ss.spawn(n_init):
        start = kmeanspp_init(range(d2.shape[0]), k, dist=dist, seed=_rng(child))
        labels, inertia, meds, _, _ = _lloyd_medoid(d2, start, KMeansConfig(k=k))
        if best is None or inertia < best[0]:
            best = (inertia, labels, meds)
    return best[1], best[2]


def _try_split(d2, members, centre, ss):
    """Local 2-medoids on ``members``; returns the two child centres or None."""
    sub = d2[np.ix_(members, members)]
    parent_bic = bic_score([d2[members, centre]])
    rng = _rng(ss)
    start = kmeanspp_init(members, 2, dist=np.sqrt(sub), seed=rng)
    labels, _, meds, _, _ = _lloyd_medoid(sub, start, KMeansConfig(k=2))
    if len(np.unique(labels)) < 2:
        return None
    groups = [sub[labels == j, meds[j]] for j in range(2)]
    if bic_score(groups) > parent_bic:
        return [int(members[meds[0]]), int(members[meds[1]])]
    return None
