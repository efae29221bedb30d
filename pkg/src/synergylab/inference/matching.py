"""Propensity-score matching for the average treatment effect on the treated.

Propensities come from an unpenalised logistic regression. Treated units,
taken in descending propensity order (ties by ID), are each paired with the
nearest still-unused control on the logit scale, provided the distance is
within ``caliper_mult`` standard deviations of the logit propensity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats
from sklearn.linear_model import LogisticRegression

from ..errors import DataError, NumericalError

SMD_LIMIT = 0.1


@dataclass(frozen=True, eq=False)
class MatchResult:
    att: float
    se: float
    ci: tuple[float, float]
    n_treated: int
    n_matched: int
    caliper: float
    balance: pd.DataFrame  # covariate, smd_before, smd_after
    pairs: np.ndarray  # (treated row, control row) positions into the input table

    @property
    def balanced(self) -> bool:
        return bool((self.balance["smd_after"].abs() < SMD_LIMIT).all())

    def as_dict(self) -> dict:
        return {
            "att": self.att,
            "se": self.se,
            "ci_low": self.ci[0],
            "ci_high": self.ci[1],
            "n_treated": self.n_treated,
            "n_matched": self.n_matched,
            "caliper": self.caliper,
            "balanced": self.balanced,
            "max_abs_smd_after": float(self.balance["smd_after"].abs().max()),
        }


def propensity_logit(X: np.ndarray, t: np.ndarray) -> np.ndarray:
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    model = LogisticRegression(penalty=None, max_iter=5000, tol=1e-10)
    model.fit((X - mu) / sd, t)
    return model.decision_function((X - mu) / sd)


class _NextFree:
    """Disjoint-set 'next available slot' in one direction over 0..n-1."""

    def __init__(self, n: int):
        self.parent = np.arange(n + 2)  # slot i stored at i+1; sentinels at 0 and n+1

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def remove(self, i: int, step: int) -> None:
        self.parent[i] = i + step


def match_nearest(treated_logit, control_logit, caliper: float, treated_order, control_ids) -> list[tuple[int, int]]:
    """Greedy 1:1 matching without replacement; returns (treated, control) index pairs."""
    order_c = np.lexsort((control_ids, control_logit))
    xs = control_logit[order_c]
    n = len(xs)
    right = _NextFree(n)  # find(i+1)-1 = first free slot >= i
    left = _NextFree(n)  # find(i+1)-1 = last free slot <= i
    pairs = []
    for ti in treated_order:
        x = treated_logit[ti]
        pos = int(np.searchsorted(xs, x))
        cands = []
        r = right.find(pos + 1) - 1
        if r < n:
            cands.append(r)
        l = left.find(pos) - 1 if pos > 0 else -1
        if l >= 0:
            # among tied logits on the left, the lowest id sits first in the block
            block = int(np.searchsorted(xs, xs[l]))
            cands.append(right.find(block + 1) - 1)
        if not cands:
            break
        best = min(cands, key=lambda j: (abs(xs[j] - x), control_ids[order_c[j]]))
        if abs(xs[best] - x) > caliper:
            continue
        pairs.append((ti, int(order_c[best])))
        right.remove(best + 1, +1)
        left.remove(best + 1, -1)
    return pairs


def _smd(x_t, x_c, pooled_sd):
    return (x_t.mean() - x_c.mean()) / pooled_sd if pooled_sd > 0 else 0.0


def psm_att(
    data: pd.DataFrame,
    treatment: str,
    covariates: list[str],
    outcome: str,
    caliper_mult: float = 0.2,
    id_col: str | None = None,
    level: float = 0.95,
) -> MatchResult:
    missing = [c for c in [treatment, outcome, *covariates] if c not in data.columns]
    if missing:
        raise DataError(f"matching columns missing: {missing}")
    t = data[treatment].to_numpy().astype(bool)
    if t.all() or not t.any():
        raise DataError("matching needs both treated and control units")
    X = data[covariates].to_numpy(dtype=float)
    y = data[outcome].to_numpy(dtype=float)
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise DataError("non-finite values in matching input")
    ids = data[id_col].to_numpy() if id_col else np.arange(len(data))
    logit = propensity_logit(X, t.astype(int))
    caliper = caliper_mult * float(np.std(logit, ddof=1))
    ti = np.flatnonzero(t)
    ci_ = np.flatnonzero(~t)
    order_t = np.lexsort((ids[ti], -logit[ti]))
    pairs = match_nearest(logit[ti], logit[ci_], caliper, order_t, ids[ci_])
    if not pairs:
        raise NumericalError(
            "no matches within caliper "
            f"{caliper:.4g}: treated logit [{logit[ti].min():.3g}, {logit[ti].max():.3g}], "
            f"control logit [{logit[ci_].min():.3g}, {logit[ci_].max():.3g}]"
        )
    pt = ti[[p[0] for p in pairs]]
    pc = ci_[[p[1] for p in pairs]]
    diff = y[pt] - y[pc]
    att = float(diff.mean())
    se = float(diff.std(ddof=1) / np.sqrt(len(diff))) if len(diff) > 1 else float("nan")
    q = stats.norm.ppf(0.5 + level / 2)
    rows = []
    for j, name in enumerate(covariates):
        xt, xc = X[t, j], X[~t, j]
        pooled = np.sqrt((xt.var(ddof=1) + xc.var(ddof=1)) / 2)
        rows.append(
            {
                "covariate": name,
                "smd_before": _smd(xt, xc, pooled),
                "smd_after": _smd(X[pt, j], X[pc, j], pooled),
            }
        )
    return MatchResult(
        att=att,
        se=se,
        ci=(att - q * se, att + q * se),
        n_treated=int(t.sum()),
        n_matched=len(pairs),
        caliper=caliper,
        balance=pd.DataFrame(rows),
        pairs=np.column_stack([pt, pc]),
    )
