"""Knowledge-production modes: feature space, k-means, k selection, PCA.

Distances and centroid updates avoid BLAS reductions so that results are
bitwise reproducible for a fixed seed whatever the thread count.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.metrics import silhouette_score

from . import _toml
from .errors import ConfigError, DataError
from .inference.kruskal import kruskal_wallis

log = logging.getLogger(__name__)

SILHOUETTE_SAMPLE = 50_000
NO_STRUCTURE = 0.25  # best mean silhouette below this: no substantial structure


@dataclass(frozen=True)
class RosterEntry:
    name: str
    group: str


def load_roster(path: str | Path | None = None) -> list[RosterEntry]:
    if path is None:
        text = resources.files("synergylab").joinpath("roster.toml").read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read roster {path}: {e}") from None
    try:
        doc = _toml.loads(text)
    except _toml.TOMLDecodeError as e:
        raise ConfigError(f"bad roster file: {e}") from None
    entries = [RosterEntry(f["name"], f.get("group", "")) for f in doc.get("feature", [])]
    if not entries:
        raise ConfigError("roster has no features")
    return entries


@dataclass(eq=False)
class FeatureMatrix:
    values: np.ndarray
    columns: list[str]
    index: np.ndarray  # row identifiers (paper node IDs)
    mean: np.ndarray | None = None
    sd: np.ndarray | None = None
    dropped_columns: list[str] = field(default_factory=list)
    n_dropped_rows: int = 0

    @property
    def shape(self):
        return self.values.shape

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, columns=self.columns, index=self.index)

    def inverse(self) -> np.ndarray:
        if self.mean is None:
            return self.values.copy()
        return self.values * self.sd + self.mean


def assemble_features(table: pd.DataFrame, roster=None, index_col: str = "paper") -> FeatureMatrix:
    """Pick the roster columns from a per-paper table; drop incomplete rows."""
    roster = roster if roster is not None else load_roster()
    names = [r.name if isinstance(r, RosterEntry) else str(r) for r in roster]
    missing = [c for c in names if c not in table.columns]
    if missing:
        raise DataError(f"feature columns unavailable: {', '.join(missing)}")
    X = table[names].astype(float).to_numpy()
    ok = np.isfinite(X).all(axis=1)
    n_drop = int((~ok).sum())
    if n_drop:
        log.info("features: dropped %d rows with missing values", n_drop)
    idx = table[index_col].to_numpy() if index_col in table.columns else np.arange(len(table))
    return FeatureMatrix(X[ok], names, idx[ok], n_dropped_rows=n_drop)


def zscore(m: FeatureMatrix) -> FeatureMatrix:
    """Standardise each column (population SD); constant columns are dropped."""
    X = m.values
    if X.shape[0] < 2:
        raise DataError("z-scoring needs at least two rows")
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    const = ~(sd > 0)
    dropped = [c for c, k in zip(m.columns, const) if k]
    if dropped:
        log.warning("zscore: dropping constant columns %s", dropped)
    keep = ~const
    Z = (X[:, keep] - mu[keep]) / sd[keep]
    cols = [c for c, k in zip(m.columns, keep) if k]
    return FeatureMatrix(Z, cols, m.index, mu[keep], sd[keep], m.dropped_columns + dropped, m.n_dropped_rows)


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------


def _sq_dist(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    D = np.empty((X.shape[0], C.shape[0]))
    for j in range(C.shape[0]):
        diff = X - C[j]
        D[:, j] = np.einsum("ij,ij->i", diff, diff)
    return D


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centres = [X[rng.integers(n)]]
    d2 = _sq_dist(X, centres[0][None, :])[:, 0]
    for _ in range(1, k):
        tot = d2.sum()
        if tot <= 0:
            i = rng.integers(n)
        else:
            i = int(np.searchsorted(np.cumsum(d2), rng.random() * tot, side="right"))
            i = min(i, n - 1)
        centres.append(X[i])
        d2 = np.minimum(d2, _sq_dist(X, X[i][None, :])[:, 0])
    return np.array(centres)


@dataclass(eq=False)
class KMeansRun:
    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    history: list[float]
    n_iter: int


def _lloyd(X: np.ndarray, C: np.ndarray, max_iter: int = 300, tol: float = 0.0) -> KMeansRun:
    k = C.shape[0]
    history = []
    labels = None
    for it in range(max_iter):
        D = _sq_dist(X, C)
        new = D.argmin(axis=1)
        inertia = float(D[np.arange(len(X)), new].sum())
        history.append(inertia)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        C_new = np.empty_like(C)
        for j in range(k):
            members = X[labels == j]
            if len(members):
                C_new[j] = members.mean(axis=0)
            else:
                # re-seed an empty cluster at the point farthest from its centre
                far = int(D[np.arange(len(X)), labels].argmax())
                C_new[j] = X[far]
        C = C_new
    D = _sq_dist(X, C)
    labels = D.argmin(axis=1)
    inertia = float(D[np.arange(len(X)), labels].sum())
    return KMeansRun(C, labels, inertia, history, it + 1)


def kmeans(X: np.ndarray, k: int, seed=0, n_init: int = 10, max_iter: int = 300) -> KMeansRun:
    """Best of ``n_init`` k-means++ / Lloyd runs by within-cluster sum of squares."""
    X = np.ascontiguousarray(X, dtype=float)
    if k < 1:
        raise ValueError("k must be >= 1")
    n_distinct = len(np.unique(X, axis=0))
    if k > n_distinct:
        raise DataError(f"k={k} exceeds the number of distinct rows ({n_distinct})")
    best = None
    for r in range(n_init):
        rng = np.random.default_rng([int(seed), int(k), r])
        run = _lloyd(X, _kmeanspp(X, k, rng), max_iter)
        if best is None or run.inertia < best.inertia:
            best = run
    return _canonical(best)


def _canonical(run: KMeansRun) -> KMeansRun:
    """Relabel clusters by decreasing size, ties by first member row."""
    k = run.centroids.shape[0]
    sizes = np.bincount(run.labels, minlength=k)
    first = np.array([np.flatnonzero(run.labels == j)[0] if sizes[j] else len(run.labels) for j in range(k)])
    order = np.lexsort((first, -sizes))
    remap = np.empty(k, dtype=np.int64)
    remap[order] = np.arange(k)
    return KMeansRun(run.centroids[order], remap[run.labels], run.inertia, run.history, run.n_iter)


def silhouette(X: np.ndarray, labels: np.ndarray, seed=0, sample: int = SILHOUETTE_SAMPLE) -> float:
    if len(np.unique(labels)) < 2:
        return float("nan")
    if len(X) > sample:
        idx = np.sort(np.random.default_rng([int(seed), 7]).choice(len(X), sample, replace=False))
        X, labels = X[idx], labels[idx]
        if len(np.unique(labels)) < 2:
            return float("nan")
    return float(silhouette_score(X, labels))


@dataclass(eq=False)
class ClusterModel:
    k: int
    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    silhouette: float
    profiles: pd.DataFrame  # per mode: z-space feature means and share
    history: list[float]

    @property
    def shares(self) -> np.ndarray:
        return self.profiles["share"].to_numpy()


def _profiles(X: np.ndarray, labels: np.ndarray, k: int, columns) -> pd.DataFrame:
    rows = []
    for j in range(k):
        m = labels == j
        rows.append({"mode": j, "n": int(m.sum()), "share": m.mean(), **dict(zip(columns, X[m].mean(axis=0)))})
    return pd.DataFrame(rows)


def cluster(m: FeatureMatrix | np.ndarray, k: int, seed=0, n_init: int = 10) -> ClusterModel:
    X = m.values if isinstance(m, FeatureMatrix) else np.asarray(m, dtype=float)
    cols = m.columns if isinstance(m, FeatureMatrix) else [f"f{j}" for j in range(X.shape[1])]
    run = kmeans(X, k, seed, n_init)
    sil = silhouette(X, run.labels, seed)
    return ClusterModel(k, run.centroids, run.labels, run.inertia, sil, _profiles(X, run.labels, k, cols), run.history)


@dataclass
class KSelection:
    k: int
    table: pd.DataFrame  # k, wcss, silhouette
    elbow_k: int | None
    no_structure: bool


def elbow_point(ks, wcss) -> int | None:
    """k farthest below the chord joining the first and last WCSS points."""
    ks = np.asarray(ks, dtype=float)
    w = np.asarray(wcss, dtype=float)
    if len(ks) < 3 or w[0] == w[-1]:
        return None
    x = (ks - ks[0]) / (ks[-1] - ks[0])
    y = (w - w[-1]) / (w[0] - w[-1])
    gap = (1 - x) - y
    return int(ks[int(np.argmax(gap))])


def select_k(m: FeatureMatrix | np.ndarray, k_range=range(2, 11), seed=0, n_init: int = 10) -> KSelection:
    X = m.values if isinstance(m, FeatureMatrix) else np.asarray(m, dtype=float)
    ks = list(k_range)
    if len(X) < max(ks) * 5:
        raise DataError(f"select_k needs at least {max(ks) * 5} rows, got {len(X)}")
    rows = []
    for k in ks:
        run = kmeans(X, k, seed, n_init)
        rows.append({"k": k, "wcss": run.inertia, "silhouette": silhouette(X, run.labels, seed)})
    table = pd.DataFrame(rows)
    sil = table["silhouette"].to_numpy()
    best = int(table["k"].iloc[int(np.nanargmax(sil))])
    return KSelection(best, table, elbow_point(table["k"], table["wcss"]), bool(np.nanmax(sil) < NO_STRUCTURE))


# ---------------------------------------------------------------------------
# outcomes by mode
# ---------------------------------------------------------------------------


@dataclass
class ModeOutcomes:
    summary: pd.DataFrame  # outcome, mode, n, mean, median, q25, q75
    tests: pd.DataFrame  # outcome, H, p
    by_group: dict  # name -> share table


def mode_shares(labels: np.ndarray, groups, k: int) -> pd.DataFrame:
    """Row-normalised share of each mode within each group value."""
    tab = pd.crosstab(pd.Series(np.asarray(groups), name="group"), pd.Series(labels, name="mode"))
    tab = tab.reindex(columns=range(k), fill_value=0)
    return tab.div(tab.sum(axis=1), axis=0)


def mode_outcomes(labels: np.ndarray, outcomes: pd.DataFrame, k: int | None = None, groups: dict | None = None) -> ModeOutcomes:
    labels = np.asarray(labels)
    k = int(labels.max()) + 1 if k is None else k
    rows, tests = [], []
    for col in outcomes.columns:
        v = outcomes[col].to_numpy(dtype=float)
        parts = []
        for j in range(k):
            x = v[(labels == j) & np.isfinite(v)]
            parts.append(x)
            rows.append(
                {
                    "outcome": col,
                    "mode": j,
                    "n": len(x),
                    "mean": x.mean() if len(x) else np.nan,
                    "median": np.median(x) if len(x) else np.nan,
                    "q25": np.quantile(x, 0.25) if len(x) else np.nan,
                    "q75": np.quantile(x, 0.75) if len(x) else np.nan,
                }
            )
        nonempty = [p for p in parts if len(p)]
        if len(nonempty) >= 2:
            h, p = kruskal_wallis(nonempty)
        else:
            h, p = np.nan, np.nan
        tests.append({"outcome": col, "H": h, "p": p})
    by_group = {name: mode_shares(labels, g, k) for name, g in (groups or {}).items()}
    return ModeOutcomes(pd.DataFrame(rows), pd.DataFrame(tests), by_group)


# ---------------------------------------------------------------------------
# PCA of per-slice synergy parameters
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class PcaResult:
    scores: np.ndarray
    loadings: np.ndarray  # d x n_components, orthonormal columns
    explained_ratio: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    columns: list[str]
    archetypes: np.ndarray | None = None  # k=3 k-means labels on the scores

    def reconstruct(self) -> np.ndarray:
        return (self.scores @ self.loadings.T) * self.sd + self.mean


def pca(X: np.ndarray, n_components: int = 2, columns=None) -> PcaResult:
    """PCA of the standardised columns of X via SVD.

    Each component's sign is fixed so its largest-magnitude loading is positive.
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if n < n_components or n_components > d:
        raise DataError(f"PCA with {n_components} components needs at least that many rows and columns")
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    Z = (X - mu) / sd
    _, s, vt = np.linalg.svd(Z, full_matrices=False)
    V = vt.T
    for j in range(V.shape[1]):
        i = int(np.argmax(np.abs(V[:, j])))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    var = s**2
    ratio = var / var.sum() if var.sum() > 0 else np.zeros_like(var)
    L = V[:, :n_components]
    return PcaResult(Z @ L, L, ratio[:n_components], mu, sd, list(columns or range(d)))


def pca_synergy(params: pd.DataFrame, n_components: int = 2, seed=0, n_archetypes: int = 3) -> PcaResult:
    cols = ["alpha", "beta", "gamma"]
    if len(params) < 3:
        raise DataError("PCA of synergy parameters needs at least 3 slices")
    res = pca(params[cols].to_numpy(float), n_components, cols)
    if len(params) >= n_archetypes and len(np.unique(res.scores, axis=0)) >= n_archetypes:
        res.archetypes = kmeans(res.scores, n_archetypes, seed).labels
    return res
