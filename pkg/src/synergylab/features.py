"""Per-paper team composition: author track records, heterogeneity, key authors.

An author's snapshot as of year t uses only papers dated strictly before t:
publication count, citations those papers received from citers also dated
before t, mean DI of those papers, academic age and the set of top-level
fields published in. Lookups are vectorised through sorted keys
``author << 16 | year`` so a snapshot is two binary searches.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .corpus import GENDER_MALE, NO_FIELD, NO_YEAR, TOP_FIELDS, Corpus, CorpusView, as_view, gender_valid
from .errors import InsufficientSupport
from .hypergraph import build_hypergraph

log = logging.getLogger(__name__)

_SHIFT = 16

KEY_ATTRIBUTES = {
    "di": "prior_mean_di",
    "citation": "prior_citations",
    "productivity": "prior_pubs",
}
HETEROGENEITY = (
    "var_age",
    "var_productivity",
    "var_citations",
    "var_di",
    "var_disciplinary",
    "gender_proportion",
)


@dataclass(frozen=True)
class AuthorSnapshot:
    author_id: int
    as_of_year: int
    prior_pubs: int
    prior_citations: int
    prior_mean_di: float | None
    academic_age: int
    prior_fields: frozenset


def _key(author, year) -> np.ndarray:
    return (np.asarray(author, dtype=np.int64) << _SHIFT) | np.asarray(year, dtype=np.int64)


class _Prefix:
    """Sorted (author, year) event keys with optional weights.

    ``count(a, t)`` and ``total(a, t)`` cover the weights of events of author ``a`` in years < t.
    """

    def __init__(self, keys: np.ndarray, weights: np.ndarray | None = None):
        order = np.argsort(keys, kind="stable")
        self.keys = keys[order]
        self.cum = None
        if weights is not None:
            # extended precision keeps differences of large prefix sums exact
            # to double rounding for realistic event counts
            w = np.asarray(weights, dtype=np.longdouble)[order]
            self.cum = np.concatenate([np.zeros(1, dtype=np.longdouble), np.cumsum(w)])

    def _bounds(self, a, t):
        lo = np.searchsorted(self.keys, _key(a, 0), side="left")
        hi = np.searchsorted(self.keys, _key(a, t), side="left")
        return lo, hi

    def count(self, a, t) -> np.ndarray:
        lo, hi = self._bounds(a, t)
        return hi - lo

    def total(self, a, t) -> np.ndarray:
        lo, hi = self._bounds(a, t)
        return (self.cum[hi] - self.cum[lo]).astype(float)


class AuthorHistory:
    """Chronological per-author record built once over a whole corpus."""

    def __init__(self, corpus: Corpus, di=None):
        self.corpus = corpus
        h = build_hypergraph(corpus)
        self.hypergraph = h
        rows = np.repeat(np.arange(h.n_edges), h.order)
        author = h.members
        year = corpus.year[rows].astype(np.int64)
        dated = year != NO_YEAR
        a, p, y = author[dated], rows[dated], year[dated]
        self._pubs = _Prefix(_key(a, y))

        # DI of prior papers: only papers whose DI is defined contribute
        if di is not None:
            d = di.di_for(p)
            ok = np.isfinite(d)
            self._di = _Prefix(_key(a[ok], y[ok]), d[ok])
        else:
            self._di = None

        # citations: an event for each (author of cited, citer) pair, dated
        # by the later of the two publication years
        n_cites = self._paper_citations_by_year(corpus)
        cp, cy, cn = n_cites
        if len(cp):
            start = h.edge_ptr[cp]
            cnt = h.order[cp]
            idx = np.repeat(start, cnt) + (np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt))
            ca = author[idx]
            cyy = np.repeat(cy, cnt)
            cw = np.repeat(cn, cnt)
        else:
            ca = cyy = cw = np.zeros(0, dtype=np.int64)
        self._cit = _Prefix(_key(ca, cyy), cw)

        # first year in each top field
        f = corpus.top_field[p].astype(np.int64)
        okf = f != NO_FIELD
        pair = a[okf] * 64 + f[okf]
        yf = y[okf]
        order = np.lexsort((yf, pair))
        pair_s, yf_s = pair[order], yf[order]
        first = np.ones(len(pair_s), dtype=bool)
        first[1:] = pair_s[1:] != pair_s[:-1]
        self._fields = _Prefix(_key(pair_s[first] // 64, yf_s[first]))
        self._field_pairs = (pair_s[first], yf_s[first])

        # first publication year: earliest dated paper or the supplied column
        fy = np.full(corpus.n_authors, np.iinfo(np.int64).max, dtype=np.int64)
        np.minimum.at(fy, a, y)
        given = corpus.first_pub_year.astype(np.int64)
        has_given = given != NO_YEAR
        fy[has_given] = np.minimum(fy[has_given], given[has_given])
        self.first_year = np.where(fy == np.iinfo(np.int64).max, NO_YEAR, fy)

    @staticmethod
    def _paper_citations_by_year(corpus: Corpus):
        src = corpus.cit_src
        dst = corpus.cit_dst
        n = corpus.n_papers
        inside = (dst < n) & (src < n)
        src, dst = src[inside], dst[inside]
        ys = corpus.year[src].astype(np.int64)
        yd = corpus.year[dst].astype(np.int64)
        ok = (ys != NO_YEAR) & (yd != NO_YEAR)
        ev_year = np.maximum(ys[ok], yd[ok])
        key = dst[ok].astype(np.int64) * 4096 + (ev_year - ev_year.min() if len(ev_year) else ev_year)
        if not len(key):
            return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int64)
        base = ev_year.min()
        u, cnt = np.unique(key, return_counts=True)
        return u // 4096, u % 4096 + base, cnt

    # vectorised queries ---------------------------------------------------
    def query(self, authors, years) -> pd.DataFrame:
        a = np.asarray(authors, dtype=np.int64)
        t = np.maximum(np.asarray(years, dtype=np.int64), 0)  # undated: empty prior
        pubs = self._pubs.count(a, t)
        cites = np.rint(self._cit.total(a, t)).astype(np.int64)
        if self._di is not None:
            n_di = self._di.count(a, t)
            s_di = self._di.total(a, t)
            with np.errstate(invalid="ignore", divide="ignore"):
                mean_di = np.where(n_di > 0, s_di / np.maximum(n_di, 1), np.nan)
        else:
            mean_di = np.full(len(a), np.nan)
        n_fields = self._fields.count(a, t)
        fy = self.first_year[a]
        age = np.where((fy != NO_YEAR) & (fy < t), t - fy, 0)
        return pd.DataFrame(
            {
                "author": a,
                "as_of_year": t,
                "prior_pubs": pubs,
                "prior_citations": cites,
                "prior_mean_di": mean_di,
                "academic_age": age,
                "n_prior_fields": n_fields,
            }
        )

    def prior_fields(self, author: int, year: int) -> frozenset:
        pair, fy = self._field_pairs
        lo = np.searchsorted(pair, author * 64)
        hi = np.searchsorted(pair, author * 64 + 64)
        return frozenset(TOP_FIELDS[int(p % 64)] for p, y in zip(pair[lo:hi], fy[lo:hi]) if y < year)


def snapshot(author: int, year: int, history: AuthorHistory) -> AuthorSnapshot:
    row = history.query([author], [year]).iloc[0]
    di = float(row.prior_mean_di)
    return AuthorSnapshot(
        author_id=int(author),
        as_of_year=int(year),
        prior_pubs=int(row.prior_pubs),
        prior_citations=int(row.prior_citations),
        prior_mean_di=None if math.isnan(di) else di,
        academic_age=int(row.academic_age),
        prior_fields=history.prior_fields(author, year),
    )


# ---------------------------------------------------------------------------
# team level
# ---------------------------------------------------------------------------


def team_snapshots(view: Corpus | CorpusView, history: AuthorHistory) -> pd.DataFrame:
    """One snapshot row per (paper, distinct author), in byline order."""
    v = as_view(view)
    h = build_hypergraph(v)
    rows = np.repeat(np.arange(h.n_edges), h.order)
    pos = np.arange(len(rows)) - np.repeat(h.edge_ptr[:-1], h.order)
    year = v.year[rows]
    snap = history.query(h.members, year)
    snap.insert(0, "row", rows)
    snap.insert(1, "paper", v.index[rows])
    snap["position"] = pos
    snap["g"] = h.order[rows]
    snap["field"] = v.top_field[rows]
    valid = gender_valid(v.corpus)
    snap["gender_valid"] = valid[h.members]
    snap["male"] = v.corpus.gender[h.members] == GENDER_MALE
    return snap


def _group_var(row: np.ndarray, x: np.ndarray, n_rows: int, ddof: int = 0) -> np.ndarray:
    ok = np.isfinite(x)
    r, v = row[ok], x[ok]
    n = np.bincount(r, minlength=n_rows).astype(float)
    s = np.bincount(r, weights=v, minlength=n_rows)
    mean = np.divide(s, n, out=np.zeros(n_rows), where=n > 0)
    ss = np.bincount(r, weights=(v - mean[r]) ** 2, minlength=n_rows)
    den = n - ddof
    return np.divide(ss, den, out=np.zeros(n_rows), where=den > 0)


def heterogeneity(snaps: pd.DataFrame, n_rows: int, ddof: int = 0) -> pd.DataFrame:
    """Team variances of the snapshot attributes plus the male share.

    Variances are population variances unless ``ddof=1``. The DI-experience
    variance runs over members with a defined prior mean DI and is 0 when
    fewer than two members have one.
    """
    row = snaps["row"].to_numpy()
    out = {
        "var_age": _group_var(row, snaps["academic_age"].to_numpy(float), n_rows, ddof),
        "var_productivity": _group_var(row, snaps["prior_pubs"].to_numpy(float), n_rows, ddof),
        "var_citations": _group_var(row, snaps["prior_citations"].to_numpy(float), n_rows, ddof),
        "var_di": _group_var(row, snaps["prior_mean_di"].to_numpy(float), n_rows, ddof),
        "var_disciplinary": _group_var(row, snaps["n_prior_fields"].to_numpy(float), n_rows, ddof),
    }
    gv = snaps["gender_valid"].to_numpy()
    n_valid = np.bincount(row[gv], minlength=n_rows).astype(float)
    n_male = np.bincount(row[gv & snaps["male"].to_numpy()], minlength=n_rows).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out["gender_proportion"] = np.where(n_valid > 0, n_male / np.maximum(n_valid, 1), np.nan)
    return pd.DataFrame(out)


def percentile_threshold(values, q: float = 0.90, min_n: int = 10) -> float:
    """Nearest-rank quantile: the ceil(q n)-th smallest value."""
    x = np.sort(np.asarray(values, dtype=float)[np.isfinite(np.asarray(values, dtype=float))])
    n = len(x)
    if n < min_n:
        raise InsufficientSupport(f"percentile needs >= {min_n} values, got {n}")
    if not 0 < q <= 1:
        raise ValueError("q must be in (0, 1]")
    rank = max(1, math.ceil(q * n - 1e-9))
    return float(x[rank - 1])


@dataclass
class KeyThresholds:
    q: float
    values: dict = field(default_factory=dict)  # (field, attribute) -> threshold
    diagnostics: list = field(default_factory=list)

    def get(self, fld: int, attr: str) -> float:
        return self.values.get((int(fld), attr), math.inf)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{"field": f, "attribute": a, "threshold": v} for (f, a), v in sorted(self.values.items())]
        )


def percentile_thresholds(snaps: pd.DataFrame, q: float = 0.90, min_n: int = 10) -> KeyThresholds:
    """Per-field thresholds over the author snapshots of the field's papers.

    Fields with too few authors get no threshold (no flags) and a
    diagnostic entry; constant pools are reported as degenerate.
    """
    th = KeyThresholds(q)
    for fld, grp in snaps.groupby("field", sort=True):
        for attr, col in KEY_ATTRIBUTES.items():
            vals = grp[col].to_numpy(float)
            vals = vals[np.isfinite(vals)]
            try:
                t = percentile_threshold(vals, q, min_n)
            except InsufficientSupport as e:
                th.diagnostics.append({"field": int(fld), "attribute": attr, "issue": str(e)})
                continue
            if vals.min() == vals.max():
                th.diagnostics.append({"field": int(fld), "attribute": attr, "issue": "constant pool"})
            th.values[(int(fld), attr)] = t
    return th


def key_author_flags(snaps: pd.DataFrame, n_rows: int, thresholds: KeyThresholds) -> pd.DataFrame:
    fld = snaps["field"].to_numpy()
    row = snaps["row"].to_numpy()
    key = np.zeros(len(snaps), dtype=bool)
    out = {}
    for attr, col in KEY_ATTRIBUTES.items():
        t = np.array([thresholds.get(f, attr) for f in fld]) if len(fld) else np.zeros(0)
        hit = snaps[col].to_numpy(float) >= t  # NaN never reaches a threshold
        key |= hit
        out[f"has_high_{attr}"] = np.bincount(row[hit], minlength=n_rows) > 0
    out["has_key_author"] = np.bincount(row[key], minlength=n_rows) > 0
    out["n_key_authors"] = np.bincount(row[key], minlength=n_rows)
    pos = snaps["position"].to_numpy()
    g = snaps["g"].to_numpy()
    first = pos == 0
    last = (pos == g - 1) & (g > 1)
    middle = ~first & ~last
    for name, m in (("key_first", first), ("key_middle", middle), ("key_last", last)):
        out[name] = np.bincount(row[key & m], minlength=n_rows) > 0
    return pd.DataFrame(out)


def key_positions(flags_row) -> set[str]:
    return {p for p in ("first", "middle", "last") if flags_row[f"key_{p}"]}


@dataclass
class TeamFeatureTables:
    features: pd.DataFrame  # paper, g, heterogeneity columns
    flags: pd.DataFrame  # paper, key-author flags and positions
    thresholds: KeyThresholds
    snapshots: pd.DataFrame


def team_features(
    view: Corpus | CorpusView,
    history: AuthorHistory,
    q: float = 0.90,
    ddof: int = 0,
    min_n: int = 10,
) -> TeamFeatureTables:
    v = as_view(view)
    snaps = team_snapshots(v, history)
    n = len(v)
    het = heterogeneity(snaps, n, ddof)
    g = np.bincount(snaps["row"].to_numpy(), minlength=n)
    feats = pd.concat([pd.DataFrame({"paper": v.index, "g": g}), het], axis=1)
    th = percentile_thresholds(snaps, q, min_n)
    flags = pd.concat([pd.DataFrame({"paper": v.index}), key_author_flags(snaps, n, th)], axis=1)
    return TeamFeatureTables(feats, flags, th, snaps)
