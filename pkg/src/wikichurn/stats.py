"""Statistical primitives used across the pipeline.

Everything here is pure and works on plain sequences or 1-D numpy arrays.
Standard deviations are population (divide-by-N) throughout.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConstantInput

EXACT_MAX_TOTAL = 14
"""Combined sample size up to which Mann-Whitney p-values are enumerated exactly."""

_U_EPS = 1e-9


@dataclass(frozen=True)
class DescriptiveStats:
    mean: float
    std: float
    n: int


@dataclass(frozen=True)
class MannWhitneyResult:
    u: float
    """U statistic of the first sample (midrank ties count one half)."""
    p_value: float
    method: str


def describe(sample: Sequence[float]) -> DescriptiveStats:
    values = [float(v) for v in sample]
    if not values:
        raise ValueError("describe() needs at least one value")
    mean = math.fsum(values) / len(values)
    var = math.fsum((v - mean) ** 2 for v in values) / len(values)
    return DescriptiveStats(mean=mean, std=math.sqrt(var), n=len(values))


def midranks(values: Sequence[float]) -> list[float]:
    """1-based ranks where tied values share the mean of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _tie_term(values: Sequence[float]) -> float:
    counts: dict[float, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return float(sum(t**3 - t for t in counts.values()))


def mann_whitney_u(
    x: Sequence[float], y: Sequence[float], method: str = "auto"
) -> MannWhitneyResult:
    """Two-sided Mann-Whitney U test.

    ``method`` is ``"auto"`` (exact when ``len(x) + len(y) <= 14``),
    ``"exact"`` or ``"asymptotic"``. The exact path enumerates every way of
    assigning the pooled midranks to ``x``, so it is exact with ties as well.
    The asymptotic path is a normal approximation with tie-corrected variance
    and a 0.5 continuity correction.
    """
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    n1, n2 = len(xs), len(ys)
    if n1 < 1 or n2 < 1:
        raise ValueError("both samples must be non-empty")
    if method not in ("auto", "exact", "asymptotic"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "exact" if n1 + n2 <= EXACT_MAX_TOTAL else "asymptotic"

    pooled = xs + ys
    ranks = midranks(pooled)
    r1 = math.fsum(ranks[:n1])
    u1 = r1 - n1 * (n1 + 1) / 2.0
    mu = n1 * n2 / 2.0
    dev = abs(u1 - mu)

    if method == "exact":
        total = 0
        extreme = 0
        offset = n1 * (n1 + 1) / 2.0
        for combo in itertools.combinations(ranks, n1):
            total += 1
            if abs(math.fsum(combo) - offset - mu) >= dev - _U_EPS:
                extreme += 1
        p = extreme / total
    else:
        n = n1 + n2
        var = n1 * n2 / 12.0 * ((n + 1) - _tie_term(pooled) / (n * (n - 1)))
        if var <= 0.0:
            p = 1.0
        else:
            z = (dev - 0.5) / math.sqrt(var)
            p = 1.0 if z <= 0.0 else math.erfc(z / math.sqrt(2.0))
    p = min(1.0, max(p, math.ulp(0.0)))
    return MannWhitneyResult(u=u1, p_value=p, method=method)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation; raises :class:`ConstantInput` when undefined."""
    a = np.asarray(x, dtype=float)
    b = np.asarray(y, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("pearson() needs two 1-D vectors of equal length")
    if a.size < 2:
        raise ValueError("pearson() needs at least two observations")
    da = a - a.mean()
    db = b - b.mean()
    sa = float(np.dot(da, da))
    sb = float(np.dot(db, db))
    if sa == 0.0 or sb == 0.0:
        raise ConstantInput("correlation undefined for a constant vector")
    r = float(np.dot(da, db)) / math.sqrt(sa * sb)
    return max(-1.0, min(1.0, r))


def correlation_matrix(matrix: np.ndarray) -> np.ndarray:
    """Pairwise Pearson matrix of the columns of ``matrix``.

    Cells involving a constant column are NaN (the undefined marker); the
    diagonal is always 1.
    """
    data = np.asarray(matrix, dtype=float)
    k = data.shape[1]
    out = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            try:
                r = pearson(data[:, i], data[:, j])
            except ConstantInput:
                r = math.nan
            out[i, j] = out[j, i] = r
    return out


def write_correlation_csv(
    path: str | Path, corr: np.ndarray, names: Sequence[str], preamble: str | None = None
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if preamble:
            fh.write(preamble)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature", *names])
        for name, row in zip(names, corr):
            writer.writerow([name, *("NA" if math.isnan(v) else repr(float(v)) for v in row)])
