"""Single-mediator path analysis with a bootstrap interval on a*b.

Paths: c from y ~ g, a from m ~ g, and b, c' from y ~ g + m. For these
nested least-squares fits c - c' = a b holds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, NumericalError
from .ols import OlsResult, ols, with_intercept

PROPORTION_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class MediationResult:
    total_effect: float
    direct_effect: float
    path_a: float
    path_b: float
    indirect_effect: float
    proportion_mediated: float | None
    suppression: bool
    bootstrap_ci: tuple[float, float]
    p_values: dict
    n_obs: int
    n_boot: int
    total: OlsResult
    a_model: OlsResult
    full: OlsResult

    @property
    def indirect_significant(self) -> bool:
        lo, hi = self.bootstrap_ci
        return lo > 0 or hi < 0

    def as_dict(self) -> dict:
        return {
            "n_obs": self.n_obs,
            "total_effect": self.total_effect,
            "direct_effect": self.direct_effect,
            "path_a": self.path_a,
            "path_b": self.path_b,
            "indirect_effect": self.indirect_effect,
            "proportion_mediated": self.proportion_mediated,
            "suppression": self.suppression,
            "indirect_ci_low": self.bootstrap_ci[0],
            "indirect_ci_high": self.bootstrap_ci[1],
            **{f"p_{k}": v for k, v in self.p_values.items()},
        }


def _paths(g, m, y) -> tuple[float, float]:
    """a and b from centred cross-products (used inside the bootstrap)."""
    gc = g - g.mean()
    mc = m - m.mean()
    yc = y - y.mean()
    sgg, smm, sgm = gc @ gc, mc @ mc, gc @ mc
    sgy, smy = gc @ yc, mc @ yc
    a = sgm / sgg
    det = sgg * smm - sgm * sgm
    b = (sgg * smy - sgm * sgy) / det if det > 0 else np.nan
    return a, b


def bootstrap_indirect(g, m, y, n_boot: int = 1000, seed=0) -> np.ndarray:
    """a*b over ``n_boot`` resamples; resample i draws from rng([seed, i])."""
    n = len(g)
    out = np.empty(n_boot)
    for i in range(n_boot):
        idx = np.random.default_rng([int(seed), i]).integers(0, n, n)
        a, b = _paths(g[idx], m[idx], y[idx])
        out[i] = a * b
    return out


def mediate(g, m, y, n_boot: int = 1000, seed=0, level: float = 0.95, robust: bool = False) -> MediationResult:
    g = np.asarray(g, dtype=float)
    m = np.asarray(m, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (len(g) == len(m) == len(y)):
        raise DataError("mediation inputs are not aligned")
    tot = ols(y, with_intercept(g), ("const", "g"), robust=robust, level=level)
    try:
        am = ols(m, with_intercept(g), ("const", "g"), robust=robust, level=level)
        full = ols(y, with_intercept(g, m), ("const", "g", "m"), robust=robust, level=level)
    except NumericalError as e:
        raise NumericalError(f"mediator not identified: {e}") from None
    if am.r_squared > 1 - 1e-12:
        raise NumericalError("mediator not identified: mediator is an exact linear function of g")
    c = tot.coef("g")
    a = am.coef("g")
    b = full.coef("m")
    c_prime = full.coef("g")
    ab = a * b
    boots = bootstrap_indirect(g, m, y, n_boot, seed)
    boots = boots[np.isfinite(boots)]
    tail = (1 - level) / 2
    if len(boots):
        ci = (float(np.quantile(boots, tail)), float(np.quantile(boots, 1 - tail)))
    else:
        ci = (np.nan, np.nan)
    p_ind = float(min(1.0, 2 * min((boots <= 0).mean(), (boots >= 0).mean()))) if len(boots) else np.nan
    scale = np.std(y) / np.std(g) if np.std(g) > 0 else 1.0
    prop = ab / c if abs(c) >= PROPORTION_TOL * max(scale, np.finfo(float).tiny) else None
    p_direct = full["g"]["p"]
    alpha = 1 - level
    ind_sig = ci[0] > 0 or ci[1] < 0
    suppression = bool(np.sign(ab) != np.sign(c_prime) and ab != 0 and p_direct < alpha and ind_sig)
    return MediationResult(
        total_effect=c,
        direct_effect=c_prime,
        path_a=a,
        path_b=b,
        indirect_effect=ab,
        proportion_mediated=prop,
        suppression=suppression,
        bootstrap_ci=ci,
        p_values={
            "total": tot["g"]["p"],
            "a": am["g"]["p"],
            "b": full["m"]["p"],
            "direct": p_direct,
            "indirect": p_ind,
        },
        n_obs=len(g),
        n_boot=n_boot,
        total=tot,
        a_model=am,
        full=full,
    )
