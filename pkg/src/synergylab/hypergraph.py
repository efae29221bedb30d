"""Coauthorship hypergraphs and group-size statistics.

Each paper is a hyperedge joining its distinct authors; its order g is the
team size. ``L_g`` counts papers of order g, ``N`` is the number of distinct
authors, ``k_g = g L_g / N`` and ``p_g = g L_g / sum_x x L_x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .corpus import NO_YEAR, Corpus, CorpusView, as_view
from .errors import DataError


@dataclass(frozen=True, eq=False)
class Hypergraph:
    """Papers as hyperedges over distinct authors, in byline order."""

    papers: np.ndarray  # corpus node IDs, one per hyperedge
    edge_ptr: np.ndarray
    members: np.ndarray  # author IDs, first-occurrence byline order
    n_duplicates: int  # byline repeats collapsed during construction

    @property
    def order(self) -> np.ndarray:
        return np.diff(self.edge_ptr)

    @property
    def n_edges(self) -> int:
        return len(self.papers)

    @property
    def nodes(self) -> np.ndarray:
        return np.unique(self.members)

    @property
    def n_authors(self) -> int:
        return len(self.nodes)

    def edge(self, i: int) -> np.ndarray:
        return self.members[self.edge_ptr[i] : self.edge_ptr[i + 1]]


def _distinct_bylines(corpus: Corpus, index: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    starts = corpus.auth_ptr[index]
    sizes = corpus.auth_ptr[index + 1] - starts
    row = np.repeat(np.arange(len(index)), sizes)
    flat = np.arange(sizes.sum()) - np.repeat(np.cumsum(sizes) - sizes, sizes) + np.repeat(starts, sizes)
    auth = corpus.auth_idx[flat].astype(np.int64)
    # stable sort by (row, author) keeps the earliest byline slot first
    order = np.lexsort((auth, row))
    r, a = row[order], auth[order]
    dup_sorted = np.zeros(len(order), dtype=bool)
    dup_sorted[1:] = (r[1:] == r[:-1]) & (a[1:] == a[:-1])
    keep = np.ones(len(order), dtype=bool)
    keep[order[dup_sorted]] = False
    counts = np.bincount(row[keep], minlength=len(index))
    ptr = np.zeros(len(index) + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr, auth[keep], int(dup_sorted.sum())


def build_hypergraph(view: Corpus | CorpusView) -> Hypergraph:
    v = as_view(view)
    ptr, members, dups = _distinct_bylines(v.corpus, v.index)
    return Hypergraph(v.index.copy(), ptr, members, dups)


def team_sizes(view: Corpus | CorpusView) -> np.ndarray:
    """Distinct-author team size of each paper in the view."""
    return build_hypergraph(view).order


@dataclass(frozen=True)
class GroupSizeDistribution:
    sizes: np.ndarray  # observed g, ascending
    counts: np.ndarray  # L_g aligned with sizes
    n_authors: int  # N

    @classmethod
    def from_counts(cls, counts: dict[int, int], n_authors: int) -> "GroupSizeDistribution":
        g = np.array(sorted(k for k, v in counts.items() if v > 0), dtype=np.int64)
        if len(g) == 0:
            raise DataError("group-size distribution needs at least one paper")
        if g[0] < 1:
            raise DataError("team sizes must be >= 1")
        L = np.array([counts[int(k)] for k in g], dtype=np.int64)
        return cls(g, L, int(n_authors))

    @property
    def g_max(self) -> int:
        return int(self.sizes[-1])

    @property
    def p(self) -> np.ndarray:
        w = self.sizes * self.counts
        return w / w.sum()

    @property
    def k(self) -> np.ndarray:
        """Average g-hyperdegree per author, k_g = g L_g / N."""
        return self.sizes * self.counts / self.n_authors

    def p_map(self) -> dict[int, float]:
        return dict(zip(self.sizes.tolist(), self.p.tolist()))

    def count_map(self) -> dict[int, int]:
        return dict(zip(self.sizes.tolist(), self.counts.tolist()))

    def capped(self, g_max: int) -> "GroupSizeDistribution":
        keep = self.sizes <= g_max
        if not keep.any():
            raise DataError(f"no team sizes <= {g_max}")
        return GroupSizeDistribution(self.sizes[keep], self.counts[keep], self.n_authors)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"g": self.sizes, "L_g": self.counts, "p_g": self.p})


def group_size_distribution(h: Hypergraph) -> GroupSizeDistribution:
    if h.n_edges == 0:
        raise DataError("empty hypergraph")
    g, L = np.unique(h.order, return_counts=True)
    if g[0] < 1:
        raise DataError("hypergraph contains a paper with no authors")
    return GroupSizeDistribution(g.astype(np.int64), L.astype(np.int64), h.n_authors)


def merge_counts(*dists: GroupSizeDistribution, n_authors: int) -> GroupSizeDistribution:
    """Pool raw L_g counts of several slices; N must be supplied for the union."""
    total: dict[int, int] = {}
    for d in dists:
        for g, L in d.count_map().items():
            total[g] = total.get(g, 0) + L
    return GroupSizeDistribution.from_counts(total, n_authors)


def mean_team_size(view: Corpus | CorpusView) -> float:
    v = as_view(view)
    if len(v) == 0:
        raise DataError("mean team size of an empty view")
    return float(team_sizes(v).mean())


def team_size_by_year(view: Corpus | CorpusView) -> pd.DataFrame:
    """Mean distinct-author team size per publication year."""
    v = as_view(view)
    g = team_sizes(v)
    y = v.year
    ok = y != NO_YEAR
    df = pd.DataFrame({"year": y[ok], "g": g[ok]})
    out = df.groupby("year", sort=True)["g"].agg(["mean", "size"]).reset_index()
    return out.rename(columns={"mean": "mean_g", "size": "n_papers"})
