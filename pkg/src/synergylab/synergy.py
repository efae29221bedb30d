"""Empirical synergy curves and the cost-benefit synergy model.

Given a size-weighted group-size distribution p_g, the public-goods
equilibrium sum_g p_g (1 - r_g) = 0 with r_g = z p_g gives z = 1 / sum p_g^2,
and the empirical synergy factor is R_emp(g) = g z p_g. The model

    R(g) = alpha * g**beta * exp(-gamma * (g - 1))

is fitted to R_emp by least squares over beta, gamma >= 0, with alpha
tied to (beta, gamma) through alpha = 1 / sum_g p_g g**(beta-1) e^(-gamma(g-1)).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import InsufficientSupport, NumericalError
from .hypergraph import GroupSizeDistribution

log = logging.getLogger(__name__)

BETA_STARTS = (0.0, 0.5, 1.0, 1.5, 2.0)
GAMMA_STARTS = (0.01, 0.05, 0.1, 0.25, 0.5)
DEFAULT_STARTS = tuple(itertools.product(BETA_STARTS, GAMMA_STARTS))

# models: "standard" fits alpha g^beta e^(-gamma(g-1)); "reduced" fits the
# per-member form alpha g^(beta-1) e^(-gamma(g-1)) for comparison
MODELS = ("standard", "reduced")


def _as_arrays(p) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(p, GroupSizeDistribution):
        return p.sizes.astype(float), p.p
    if isinstance(p, EmpiricalSynergy):
        return p.g, p.p
    if isinstance(p, dict):
        g = np.array(sorted(p), dtype=float)
        return g, np.array([p[int(k)] for k in g], dtype=float)
    g, pv = p
    return np.asarray(g, dtype=float), np.asarray(pv, dtype=float)


@dataclass(frozen=True, eq=False)
class EmpiricalSynergy:
    g: np.ndarray
    p: np.ndarray
    z: float
    r_emp: np.ndarray
    R_emp: np.ndarray

    @property
    def residual(self) -> float:
        """Equilibrium residual sum_g p_g (1 - r_emp(g))."""
        return float(np.sum(self.p * (1.0 - self.r_emp)))

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.g.astype(int).tolist(), self.R_emp.tolist()))

    @classmethod
    def observed(cls, g, p, R) -> "EmpiricalSynergy":
        """Wrap an externally measured (e.g. perturbed) R curve over p."""
        g, pv = _as_arrays((g, p))
        R = np.asarray(R, dtype=float)
        return cls(g, pv, equilibrium_scale((g, pv)), R / g, R)


def equilibrium_scale(p) -> float:
    _, pv = _as_arrays(p)
    return float(1.0 / np.dot(pv, pv))


def empirical_synergy(p) -> EmpiricalSynergy:
    g, pv = _as_arrays(p)
    z = equilibrium_scale((g, pv))
    r = z * pv
    return EmpiricalSynergy(g, pv, z, r, g * r)


def _log_terms(beta: float, gamma: float, g: np.ndarray) -> np.ndarray:
    return (beta - 1.0) * np.log(g) - gamma * (g - 1.0)


def alpha_of(beta: float, gamma: float, p) -> float:
    """Scaling constant alpha(beta, gamma) over the full support of p."""
    if beta < 0 or gamma < 0:
        raise ValueError("beta and gamma must be non-negative")
    g, pv = _as_arrays(p)
    with np.errstate(over="ignore"):
        s = float(np.sum(pv * np.exp(_log_terms(beta, gamma, g))))
    if not math.isfinite(s) or s <= 0:
        raise NumericalError(
            f"alpha overflow: beta={beta:g} gamma={gamma:g} g_max={g.max():g} "
            f"max exponent={(beta - 1) * math.log(g.max()):.1f}"
        )
    return 1.0 / s


def model_R(g, alpha: float, beta: float, gamma: float, model: str = "standard"):
    g = np.asarray(g, dtype=float)
    expo = beta if model == "standard" else beta - 1.0
    out = alpha * g**expo * np.exp(-gamma * (g - 1.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class StartTrace:
    beta0: float
    gamma0: float
    beta: float
    gamma: float
    rss: float
    n_iter: int
    converged: bool


@dataclass(frozen=True)
class OptimalSize:
    kind: str  # interior | boundary | monotone_increasing | flat
    g_star: float | None

    @property
    def interior(self) -> bool:
        return self.kind == "interior"


@dataclass(frozen=True, eq=False)
class SynergyFit:
    alpha: float
    beta: float
    gamma: float
    rss: float
    r_squared: float
    included_sizes: tuple[int, ...]
    excluded_sizes: tuple[int, ...]
    n_starts: int
    model: str = "standard"
    weight: str | None = None
    trace: tuple[StartTrace, ...] = field(default=(), repr=False)

    @property
    def optimum(self) -> OptimalSize:
        return optimal_group_size(self)

    @property
    def g_star(self) -> float | None:
        return self.optimum.g_star

    def R_at(self, g):
        return R_at(self, g)

    def as_dict(self) -> dict:
        opt = self.optimum
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "r_squared": self.r_squared,
            "rss": self.rss,
            "g_star": opt.g_star,
            "optimum": opt.kind,
            "included_sizes": list(self.included_sizes),
            "excluded_sizes": list(self.excluded_sizes),
            "n_starts": self.n_starts,
            "model": self.model,
            "weight": self.weight,
            "trace": [t.__dict__ for t in self.trace],
        }


def fit_synergy(
    emp: EmpiricalSynergy,
    counts: dict[int, int] | None = None,
    min_count: int = 100,
    starts=DEFAULT_STARTS,
    weight: str | None = None,
    model: str = "standard",
    xatol: float = 1e-8,
    maxiter: int = 2000,
) -> SynergyFit:
    """Least-squares fit of the synergy model to R_emp.

    Sizes with fewer than ``min_count`` papers are left out of the residual
    sum; ``counts=None`` keeps every size. alpha always runs over the full
    p support. ``weight="Lg"`` weights each residual by its paper count.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    if weight not in (None, "Lg"):
        raise ValueError(f"unknown weight {weight!r}")
    g_all, p_all = emp.g, emp.p
    if counts is None:
        keep = np.ones(len(g_all), dtype=bool)
        L = np.ones(len(g_all))
    else:
        L = np.array([counts.get(int(k), 0) for k in g_all], dtype=float)
        keep = L >= min_count
    if keep.sum() < 3:
        raise InsufficientSupport(
            f"insufficient support: {int(keep.sum())} sizes with L_g >= {min_count} (need 3)"
        )
    g, y = g_all[keep], emp.R_emp[keep]
    wts = L[keep] if weight == "Lg" else np.ones(len(g))
    logg = np.log(g)
    logg_all = np.log(g_all)
    gm1_all = g_all - 1.0
    expo_shift = 0.0 if model == "standard" else -1.0

    def predict(b, c):
        a = 1.0 / np.sum(p_all * np.exp((b - 1.0) * logg_all - c * gm1_all))
        return a, a * np.exp((b + expo_shift) * logg - c * (g - 1.0))

    def rss(x):
        b, c = x
        with np.errstate(over="ignore", invalid="ignore"):
            _, pred = predict(b, c)
            r = float(np.sum(wts * (y - pred) ** 2))
        return r if math.isfinite(r) else 1e300

    ybar = np.sum(wts * y) / np.sum(wts)
    tss = float(np.sum(wts * (y - ybar) ** 2))
    # the simplex-size test decides convergence; the value test only has to
    # be loose enough not to block it once residuals sit at rounding level
    fatol = 1e-14 * max(tss, float(np.sum(wts * y**2)))
    traces = []
    for b0, c0 in starts:
        res = minimize(
            rss,
            np.array([b0, c0], dtype=float),
            method="Nelder-Mead",
            bounds=[(0.0, None), (0.0, None)],
            options={"xatol": xatol, "fatol": fatol, "maxiter": maxiter, "maxfev": 4 * maxiter},
        )
        b, c = (max(0.0, float(v)) for v in res.x)
        traces.append(StartTrace(float(b0), float(c0), b, c, rss((b, c)), int(res.nit), bool(res.success)))
    ok = [t for t in traces if math.isfinite(t.rss) and t.rss < 1e300]
    if not ok or not any(t.converged for t in traces):
        diag = "; ".join(f"({t.beta0},{t.gamma0})->rss={t.rss:.3g} it={t.n_iter}" for t in traces)
        raise NumericalError(f"synergy fit did not converge from any start: {diag}")
    best = min(ok, key=lambda t: t.rss)  # min keeps the first of equal values
    alpha = alpha_of(best.beta, best.gamma, (g_all, p_all))
    r2 = 1.0 - best.rss / tss if tss > 0 else (1.0 if best.rss == 0 else -math.inf)
    return SynergyFit(
        alpha=alpha,
        beta=best.beta,
        gamma=best.gamma,
        rss=best.rss,
        r_squared=r2,
        included_sizes=tuple(int(k) for k in g),
        excluded_sizes=tuple(int(k) for k in g_all[~keep]),
        n_starts=len(traces),
        model=model,
        weight=weight,
        trace=tuple(traces),
    )


def fit_distribution(dist: GroupSizeDistribution, min_count: int = 100, **kw) -> SynergyFit:
    return fit_synergy(empirical_synergy(dist), dist.count_map(), min_count=min_count, **kw)


_ZERO = 1e-12


def optimal_group_size(fit) -> OptimalSize:
    """Classify where alpha g^beta e^(-gamma(g-1)) peaks for g >= 1.

    The stationary point is g = beta / gamma; it is an interior maximum only
    when that ratio exceeds 1.
    """
    beta, gamma = fit.beta, fit.gamma
    if gamma <= _ZERO:
        return OptimalSize("flat" if beta <= _ZERO else "monotone_increasing", None)
    ratio = beta / gamma
    if ratio > 1.0:
        return OptimalSize("interior", ratio)
    return OptimalSize("boundary", None)


def R_at(fit: SynergyFit, g):
    return model_R(g, fit.alpha, fit.beta, fit.gamma)
