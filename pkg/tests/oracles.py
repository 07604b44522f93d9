"""Independent reference implementations used as test oracles."""

from __future__ import annotations

import itertools
import math


def brute_force_p(x, y):
    """Two-sided Mann-Whitney p by relabelling the pooled values every possible way."""
    pooled = list(x) + list(y)
    n1 = len(x)

    def u_of(idx):
        chosen = set(idx)
        xs = [pooled[i] for i in idx]
        ys = [pooled[i] for i in range(len(pooled)) if i not in chosen]
        return sum((a > b) + 0.5 * (a == b) for a in xs for b in ys)

    mu = len(x) * len(y) / 2
    observed = abs(u_of(tuple(range(n1))) - mu)
    splits = list(itertools.combinations(range(len(pooled)), n1))
    hits = sum(abs(u_of(s) - mu) >= observed - 1e-12 for s in splits)
    return hits / len(splits)


def two_pass_pearson(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y))
    vx = sum((a - mx) ** 2 for a in x)
    vy = sum((b - my) ** 2 for b in y)
    return cov / math.sqrt(vx * vy)
