"""Wilcoxon signed-rank test and the multi-comparison matrix (MCM)."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import ValidationError

EXACT_MAX_N = 20
ALPHA = 0.05


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    pvalue: float
    n: int
    exact: bool
    degenerate: bool = False


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    return ranks


def _exact_tail_probs(doubled_ranks: np.ndarray, observed: int) -> tuple[float, float]:
    """``P(W+ <= w)`` and ``P(W+ >= w)`` over all 2^n sign patterns.

    Works on doubled ranks so tied (half-integer) ranks stay integral.
    """
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled_ranks.astype(int):
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    n_patterns = 2.0 ** doubled_ranks.size
    lower = counts[: observed + 1].sum() / n_patterns
    upper = counts[observed:].sum() / n_patterns
    return float(lower), float(upper)


def wilcoxon_signed_rank(x: Sequence[float], y: Sequence[float], mode: str = "auto") -> WilcoxonResult:
    """Two-sided paired Wilcoxon signed-rank test.

    Zero differences are dropped and ties share average ranks. ``mode="auto"``
    is exact for up to 20 non-zero differences, otherwise normal approximation
    with tie and continuity corrections; ``"exact"`` and ``"approx"`` force a
    branch. The statistic is ``min(W+, W-)``.
    """
    if mode not in ("auto", "exact", "approx"):
        raise ValidationError(f"unknown mode {mode!r}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValidationError(f"paired samples differ in length: {x.size} vs {y.size}")
    d = x - y
    d = d[d != 0]
    n = d.size
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, True, degenerate=True)
    ranks = _average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    stat = min(w_plus, w_minus)

    if mode == "exact" or (mode == "auto" and n <= EXACT_MAX_N):
        lower, upper = _exact_tail_probs(2 * ranks, int(round(2 * w_plus)))
        p = min(1.0, 2.0 * min(lower, upper))
        return WilcoxonResult(stat, p, n, True)

    mean = n * (n + 1) / 4.0
    _, tie_sizes = np.unique(np.abs(d), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_sizes**3 - tie_sizes)) / 48.0
    z = (abs(w_plus - mean) - 0.5) / math.sqrt(var)
    p = 1.0 if z <= 0 else min(1.0, math.erfc(z / math.sqrt(2.0)))
    return WilcoxonResult(stat, p, n, False)


@dataclass(frozen=True)
class McmCell:
    mean_diff: float
    wins: int
    ties: int
    losses: int
    pvalue: float

    @property
    def significant(self) -> bool:
        return self.pvalue < ALPHA


def mcm(results: Mapping[str, Sequence[float]]) -> dict[tuple[str, str], McmCell]:
    """Pairwise comparison of methods over paired experiments.

    ``results`` maps method name to its accuracy per experiment; the cell
    ``(a, b)`` reports ``mean(a) - mean(b)``, a's wins/ties/losses against b,
    and the Wilcoxon p-value.
    """
    names = list(results)
    vecs = {m: np.asarray(results[m], dtype=float) for m in names}
    lengths = {v.size for v in vecs.values()}
    if len(lengths) > 1:
        raise ValidationError(f"unpaired result vectors, lengths {sorted(lengths)}")
    cells = {}
    for a in names:
        for b in names:
            va, vb = vecs[a], vecs[b]
            test = wilcoxon_signed_rank(va, vb)
            cells[(a, b)] = McmCell(
                mean_diff=float(va.mean() - vb.mean()) if va.size else 0.0,
                wins=int(np.sum(va > vb)),
                ties=int(np.sum(va == vb)),
                losses=int(np.sum(va < vb)),
                pvalue=test.pvalue,
            )
    return cells


def _methods(cells) -> list[str]:
    seen = []
    for a, _ in cells:
        if a not in seen:
            seen.append(a)
    return seen


def mcm_to_csv(cells: Mapping[tuple[str, str], McmCell]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "competitor", "mean_diff", "wins", "ties", "losses", "p_value", "significant"])
    for (a, b), cell in cells.items():
        w.writerow([a, b, f"{cell.mean_diff:.6f}", cell.wins, cell.ties, cell.losses,
                    f"{cell.pvalue:.6g}", int(cell.significant)])
    return buf.getvalue()


def mcm_to_markdown(cells: Mapping[tuple[str, str], McmCell]) -> str:
    """Markdown grid; significant cells (p < 0.05) are bold."""
    names = _methods(cells)
    lines = ["| | " + " | ".join(names) + " |", "|---" * (len(names) + 1) + "|"]
    for a in names:
        row = [a]
        for b in names:
            c = cells[(a, b)]
            text = f"{c.mean_diff:+.4f}<br>{c.wins}/{c.ties}/{c.losses}<br>p={c.pvalue:.3g}"
            row.append(f"**{text}**" if c.significant else text)
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"
