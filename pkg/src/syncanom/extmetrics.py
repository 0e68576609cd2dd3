"""External clustering metrics (ARI, FMI) and Pearson correlation."""

from __future__ import annotations

import math

import numpy as np

from .core import ValidationError


def _comb2(x):
    return x * (x - 1) / 2.0


def _contingency(labels_true, labels_pred) -> np.ndarray:
    t = np.asarray(labels_true)
    p = np.asarray(labels_pred)
    if t.shape != p.shape or t.ndim != 1:
        raise ValidationError(f"label vectors differ in shape: {t.shape} vs {p.shape}")
    if t.size < 2:
        raise ValidationError("need at least two labels")
    _, ti = np.unique(t, return_inverse=True)
    _, pi = np.unique(p, return_inverse=True)
    table = np.zeros((ti.max() + 1, pi.max() + 1), dtype=np.int64)
    np.add.at(table, (ti, pi), 1)
    return table


def pair_counts(labels_true, labels_pred) -> tuple[int, int, int, int]:
    """Pair confusion counts ``(TP, FP, FN, TN)`` from the contingency table."""
    table = _contingency(labels_true, labels_pred)
    n = int(table.sum())
    tp = int(_comb2(table).sum())
    same_pred = int(_comb2(table.sum(axis=0)).sum())
    same_true = int(_comb2(table.sum(axis=1)).sum())
    fp = same_pred - tp
    fn = same_true - tp
    tn = int(_comb2(n)) - tp - fp - fn
    return tp, fp, fn, tn


def ari(labels_true, labels_pred) -> float:
    """Adjusted Rand index (Hubert-Arabie)."""
    table = _contingency(labels_true, labels_pred)
    n = table.sum()
    index = _comb2(table).sum()
    rows = _comb2(table.sum(axis=1)).sum()
    cols = _comb2(table.sum(axis=0)).sum()
    expected = rows * cols / _comb2(n)
    max_index = 0.5 * (rows + cols)
    if max_index == expected:
        # both partitions trivial: identical ones score 1
        same = np.count_nonzero(table) == table.shape[0] == table.shape[1]
        return 1.0 if same else 0.0
    return float((index - expected) / (max_index - expected))


def fmi(labels_true, labels_pred) -> float:
    """Fowlkes-Mallows index: geometric mean of pairwise precision and recall."""
    tp, fp, fn, _ = pair_counts(labels_true, labels_pred)
    if tp + fp == 0 or tp + fn == 0:
        return 0.0
    return tp / math.sqrt((tp + fp) * (tp + fn))


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("pearson needs two vectors of equal length")
    if x.size < 2:
        raise ValidationError("pearson needs at least two samples")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = math.sqrt(float(xc @ xc))
    sy = math.sqrt(float(yc @ yc))
    if sx == 0 or sy == 0:
        raise ValidationError("undefined correlation: constant input")
    r = float(xc @ yc) / (sx * sy)
    return max(-1.0, min(1.0, r))
