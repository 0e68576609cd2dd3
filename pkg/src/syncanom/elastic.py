"""Sequence preprocessing and elastic distances (DTW, MSM).

The dynamic programs are compiled with numba; every public function accepts
plain sequences and converts them to float64 arrays.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from numba import njit

from .core import ValidationError

MEASURES = ("dtw", "msm", "euclidean")


def as_sequence(values) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError("a sequence must be a non-empty 1-D array")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("sequence contains non-finite values")
    return arr


def moving_average(seq, window: int = 5) -> np.ndarray:
    """Centered moving average; edge windows shrink to the available samples."""
    x = as_sequence(seq)
    if window < 1 or window % 2 == 0:
        raise ValidationError(f"window must be a positive odd integer, got {window}")
    half = window // 2
    n = x.size
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


def zero_pad(seqs: Sequence) -> list[np.ndarray]:
    """Right-pad every sequence with zeros to the longest length."""
    if len(seqs) == 0:
        raise ValidationError("zero_pad needs at least one sequence")
    arrs = [as_sequence(s) for s in seqs]
    width = max(a.size for a in arrs)
    out = []
    for a in arrs:
        padded = np.zeros(width)
        padded[: a.size] = a
        out.append(padded)
    return out


@njit(cache=True)
def _dtw_cost(x, y):
    n, m = x.shape[0], y.shape[0]
    prev = np.full(m + 1, np.inf)
    cur = np.full(m + 1, np.inf)
    prev[0] = 0.0
    for i in range(1, n + 1):
        cur[0] = np.inf
        xi = x[i - 1]
        for j in range(1, m + 1):
            d = xi - y[j - 1]
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = d * d + best
        prev, cur = cur, prev
    return prev[m]


@njit(cache=True)
def _dtw_matrix(x, y):
    n, m = x.shape[0], y.shape[0]
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d = x[i - 1] - y[j - 1]
            acc[i, j] = d * d + min(acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])
    return acc


@njit(cache=True)
def _dtw_path(x, y):
    """Optimal warping path as two index arrays, from (0, 0) to (n-1, m-1)."""
    acc = _dtw_matrix(x, y)
    i, j = x.shape[0], y.shape[0]
    pi = np.empty(i + j, dtype=np.int64)
    pj = np.empty(i + j, dtype=np.int64)
    k = 0
    while True:
        pi[k] = i - 1
        pj[k] = j - 1
        k += 1
        if i == 1 and j == 1:
            break
        diag = acc[i - 1, j - 1]
        up = acc[i - 1, j]
        left = acc[i, j - 1]
        if diag <= up and diag <= left:
            i -= 1
            j -= 1
        elif up <= left:
            i -= 1
        else:
            j -= 1
    return pi[:k][::-1].copy(), pj[:k][::-1].copy()


@njit(cache=True)
def _msm_split_cost(u, v, w, c):
    if (v <= u <= w) or (v >= u >= w):
        return c
    return c + min(abs(u - v), abs(u - w))


@njit(cache=True)
def _msm_cost(x, y, c):
    n, m = x.shape[0], y.shape[0]
    cost = np.empty((n, m))
    cost[0, 0] = abs(x[0] - y[0])
    for i in range(1, n):
        cost[i, 0] = cost[i - 1, 0] + _msm_split_cost(x[i], x[i - 1], y[0], c)
    for j in range(1, m):
        cost[0, j] = cost[0, j - 1] + _msm_split_cost(y[j], x[0], y[j - 1], c)
    for i in range(1, n):
        for j in range(1, m):
            move = cost[i - 1, j - 1] + abs(x[i] - y[j])
            split = cost[i - 1, j] + _msm_split_cost(x[i], x[i - 1], y[j], c)
            merge = cost[i, j - 1] + _msm_split_cost(y[j], x[i], y[j - 1], c)
            cost[i, j] = min(move, split, merge)
    return cost[n - 1, m - 1]


def dtw(x, y) -> float:
    """DTW with squared local cost and no window; returns the square root of the path cost."""
    return float(np.sqrt(_dtw_cost(as_sequence(x), as_sequence(y))))


def dtw_path(x, y) -> list[tuple[int, int]]:
    pi, pj = _dtw_path(as_sequence(x), as_sequence(y))
    return list(zip(pi.tolist(), pj.tolist()))


def msm(x, y, c: float = 1.0) -> float:
    """Move-split-merge distance with split/merge cost ``c``."""
    if c <= 0:
        raise ValidationError(f"msm cost must be positive, got {c}")
    return float(_msm_cost(as_sequence(x), as_sequence(y), float(c)))


def euclidean(x, y) -> float:
    x, y = as_sequence(x), as_sequence(y)
    if x.size != y.size:
        raise ValidationError("euclidean distance needs equal lengths; zero_pad first")
    return float(np.sqrt(np.sum((x - y) ** 2)))


def get_measure(measure: str, c: float = 1.0):
    """Return a two-argument distance callable for ``measure``."""
    if measure == "dtw":
        return dtw
    if measure == "msm":
        return lambda x, y: msm(x, y, c)
    if measure == "euclidean":
        return euclidean
    raise ValidationError(f"unknown measure {measure!r}; choose from {MEASURES}")


def distance_matrix(seqs: Sequence, measure: str = "dtw", c: float = 1.0) -> np.ndarray:
    """Symmetric pairwise distances with zero diagonal.

    ``euclidean`` zero-pads the sequences first. Each unordered pair is
    computed once and mirrored.
    """
    if len(seqs) < 2:
        raise ValidationError("distance_matrix needs at least two sequences")
    arrs = zero_pad(seqs) if measure == "euclidean" else [as_sequence(s) for s in seqs]
    dist = get_measure(measure, c)
    n = len(arrs)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = dist(arrs[i], arrs[j])
    return out
