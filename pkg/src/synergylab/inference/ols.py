"""Ordinary least squares with classical or HC1 standard errors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.linalg
from scipy import stats

from ..errors import DataError, NumericalError


@dataclass(frozen=True, eq=False)
class OlsResult:
    names: tuple[str, ...]
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    r_squared: float
    n_obs: int
    df_resid: int
    rss: float
    cov: np.ndarray
    robust: bool = False

    def __getitem__(self, name: str) -> dict:
        i = self.names.index(name)
        return {
            "estimate": float(self.coefficients[i]),
            "se": float(self.standard_errors[i]),
            "t": float(self.t_stats[i]),
            "p": float(self.p_values[i]),
            "ci_low": float(self.ci_low[i]),
            "ci_high": float(self.ci_high[i]),
        }

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "term": self.names,
                "estimate": self.coefficients,
                "se": self.standard_errors,
                "t": self.t_stats,
                "p": self.p_values,
                "ci_low": self.ci_low,
                "ci_high": self.ci_high,
            }
        )


def _collinear(X: np.ndarray, names) -> list[str]:
    _, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    tol = d.max() * max(X.shape) * np.finfo(float).eps if len(d) else 0.0
    rank = int((d > tol).sum())
    return [names[j] for j in sorted(piv[rank:])]


def ols(y, X, names=None, robust: bool = False, level: float = 0.95) -> OlsResult:
    """Regress y on the columns of X (no intercept is added).

    Standard errors are classical unless ``robust=True`` (HC1).
    Rank-deficient designs raise and name the dependent columns.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(k))
    if len(y) != n:
        raise DataError(f"y has {len(y)} rows, X has {n}")
    if not (np.isfinite(y).all() and np.isfinite(X).all()):
        raise DataError("non-finite values in regression input")
    if n <= k:
        raise NumericalError(f"need more observations ({n}) than regressors ({k})")
    bad = _collinear(X, names)
    if bad:
        raise NumericalError(f"design matrix is rank deficient; collinear columns: {', '.join(bad)}")
    Q, R = np.linalg.qr(X)
    beta = scipy.linalg.solve_triangular(R, Q.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    df = n - k
    Rinv = scipy.linalg.solve_triangular(R, np.eye(k))
    xtx_inv = Rinv @ Rinv.T
    if robust:
        meat = (X * resid[:, None] ** 2).T @ X
        cov = xtx_inv @ meat @ xtx_inv * (n / df)
    else:
        cov = xtx_inv * (rss / df)
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.sign(beta) * np.inf)
    p = 2 * stats.t.sf(np.abs(t), df)
    q = stats.t.ppf(0.5 + level / 2, df)
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else (1.0 if rss == 0 else 0.0)
    return OlsResult(names, beta, se, t, p, beta - q * se, beta + q * se, r2, n, df, rss, cov, robust)


def with_intercept(*cols) -> np.ndarray:
    n = len(cols[0])
    return np.column_stack([np.ones(n), *[np.asarray(c, dtype=float) for c in cols]])
