"""Kruskal-Wallis rank test with tie correction."""

from __future__ import annotations

import numpy as np
from scipy import stats

from ..errors import DataError


def kruskal_wallis(groups) -> tuple[float, float]:
    groups = [np.asarray(g, dtype=float).ravel() for g in groups]
    if len(groups) < 2:
        raise DataError("Kruskal-Wallis needs at least two groups")
    if any(len(g) == 0 for g in groups):
        raise DataError("Kruskal-Wallis group is empty")
    pooled = np.concatenate(groups)
    n = len(pooled)
    ranks = stats.rankdata(pooled)
    bounds = np.cumsum([0] + [len(g) for g in groups])
    h = sum(ranks[a:b].sum() ** 2 / (b - a) for a, b in zip(bounds[:-1], bounds[1:]))
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
    _, ties = np.unique(pooled, return_counts=True)
    corr = 1.0 - (ties**3 - ties).sum() / (n**3 - n) if n > 1 else 0.0
    if corr <= 0:
        return 0.0, 1.0
    h = max(h / corr, 0.0)
    return float(h), float(stats.chi2.sf(h, len(groups) - 1))
