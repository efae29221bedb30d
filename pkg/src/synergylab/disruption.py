"""Disruption index DI_l over a citation graph.

For a focal paper ``fp`` published in year ``t`` with reference set ``R``,
only papers dated in ``[t, t + w]`` are considered:

* citers of ``fp`` citing at least ``l`` members of ``R`` count as ``n_j``;
* the remaining citers of ``fp`` count as ``n_i`` (or, with
  ``subthreshold="drop"``, only those citing no member of ``R``);
* papers citing some member of ``R`` but not ``fp`` count as ``n_k``.

DI_l = (n_i - n_j) / (n_i + n_j + n_k), undefined when the denominator is 0.
With ``l=1`` this is the original CD index.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numba
import numpy as np
import pandas as pd
from numba import njit, prange

from .errors import DataError
from .graph import NO_YEAR, CitationGraph, year_key

log = logging.getLogger(__name__)

# prefer OpenMP; the TBB layer on some systems is too old and only warns
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

_T_MAX = 2**30 - 1  # undated nodes sort above this (see graph.year_key)
_CHUNK = 4096


@dataclass(frozen=True)
class CiterClassification:
    n_i: int
    n_j: int
    n_k: int
    l: int
    window: float | None

    @property
    def total(self) -> int:
        return self.n_i + self.n_j + self.n_k


@dataclass(frozen=True)
class DisruptionScore:
    paper: int
    di: float | None
    classification: CiterClassification

    @property
    def defined(self) -> bool:
        return self.di is not None


def di_value(n_i: int, n_j: int, n_k: int) -> float | None:
    den = n_i + n_j + n_k
    if den == 0:
        return None
    return (n_i - n_j) / den


@njit(cache=True, nogil=True)
def _lower_bound(idx, lo, hi, ykey, t):
    while lo < hi:
        mid = (lo + hi) >> 1
        if ykey[idx[mid]] < t:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True, nogil=True)
def _classify(fp, stamp, l, w, drop_sub, bisect, fwd_ptr, fwd_idx, bwd_ptr, bwd_idx, ykey, refmark, citmark, seen):
    t = ykey[fp]
    tmax = t + w
    if tmax > _T_MAX:
        tmax = _T_MAX
    for e in range(fwd_ptr[fp], fwd_ptr[fp + 1]):
        refmark[fwd_idx[e]] = stamp
    lo = bwd_ptr[fp]
    hi = bwd_ptr[fp + 1]
    for e in range(lo, hi):
        citmark[bwd_idx[e]] = stamp
    if bisect:
        lo = _lower_bound(bwd_idx, lo, hi, ykey, t)
    n_i = 0
    n_j = 0
    for e in range(lo, hi):
        c = bwd_idx[e]
        yc = ykey[c]
        if yc > tmax:
            if bisect:
                break
            continue
        if yc < t:
            continue
        cnt = 0
        for e2 in range(fwd_ptr[c], fwd_ptr[c + 1]):
            if refmark[fwd_idx[e2]] == stamp:
                cnt += 1
                if cnt >= l:
                    break
        if cnt >= l:
            n_j += 1
        elif cnt == 0 or not drop_sub:
            n_i += 1
    n_k = 0
    for e in range(fwd_ptr[fp], fwd_ptr[fp + 1]):
        r = fwd_idx[e]
        a = bwd_ptr[r]
        b = bwd_ptr[r + 1]
        if bisect:
            a = _lower_bound(bwd_idx, a, b, ykey, t)
        for e2 in range(a, b):
            c = bwd_idx[e2]
            yc = ykey[c]
            if yc > tmax:
                if bisect:
                    break
                continue
            if yc < t:
                continue
            if c == fp or citmark[c] == stamp or seen[c] == stamp:
                continue
            seen[c] = stamp
            n_k += 1
    return n_i, n_j, n_k


@njit(parallel=True, cache=True)
def _batch(focal, l, w, drop_sub, bisect, n_nodes, fwd_ptr, fwd_idx, bwd_ptr, bwd_idx, ykey, chunk):
    n = len(focal)
    out = np.zeros((n, 3), dtype=np.int64)
    n_chunks = (n + chunk - 1) // chunk
    for ch in prange(n_chunks):
        refmark = np.zeros(n_nodes, dtype=np.int32)
        citmark = np.zeros(n_nodes, dtype=np.int32)
        seen = np.zeros(n_nodes, dtype=np.int32)
        start = ch * chunk
        stop = min(start + chunk, n)
        for i in range(start, stop):
            # stamps are unique per focal paper, so scratch arrays are never reset
            a, b, c = _classify(
                focal[i], i - start + 1, l, w, drop_sub, bisect,
                fwd_ptr, fwd_idx, bwd_ptr, bwd_idx, ykey, refmark, citmark, seen,
            )
            out[i, 0] = a
            out[i, 1] = b
            out[i, 2] = c
    return out


def _window_int(w) -> int:
    if w is None or (isinstance(w, float) and math.isinf(w)):
        return _T_MAX
    if w < 0:
        raise ValueError("window must be non-negative")
    return int(w)


def _run(graph: CitationGraph, focal: np.ndarray, l: int, w, subthreshold: str) -> np.ndarray:
    if l < 1:
        raise ValueError("threshold l must be >= 1")
    if subthreshold not in ("reclassify", "drop"):
        raise ValueError(f"unknown subthreshold mode {subthreshold!r}")
    focal = np.ascontiguousarray(focal, dtype=np.int64)
    if len(focal) == 0:
        return np.zeros((0, 3), dtype=np.int64)
    return _batch(
        focal, int(l), _window_int(w), subthreshold == "drop", graph.year_sorted, graph.n_nodes,
        graph.fwd_ptr, graph.fwd_idx, graph.bwd_ptr, graph.bwd_idx, year_key(graph.year), _CHUNK,
    )


def _require_year(graph: CitationGraph, fp: int) -> None:
    graph._check(fp)
    if graph.year[fp] == NO_YEAR:
        raise DataError(f"focal paper {fp} has no publication year")


def classify_citers(graph: CitationGraph, fp: int, l: int = 5, w=5, subthreshold: str = "reclassify") -> CiterClassification:
    _require_year(graph, fp)
    n_i, n_j, n_k = (int(v) for v in _run(graph, np.array([fp]), l, w, subthreshold)[0])
    return CiterClassification(n_i, n_j, n_k, l, w)


def di_l(graph: CitationGraph, fp: int, l: int = 5, w=5, subthreshold: str = "reclassify") -> DisruptionScore:
    cls = classify_citers(graph, fp, l, w, subthreshold)
    return DisruptionScore(fp, di_value(cls.n_i, cls.n_j, cls.n_k), cls)


@dataclass(frozen=True, eq=False)
class DiTable:
    papers: np.ndarray
    n_i: np.ndarray
    n_j: np.ndarray
    n_k: np.ndarray
    di: np.ndarray
    defined: np.ndarray
    l: int
    window: float | None

    def __len__(self) -> int:
        return len(self.papers)

    def _pos(self, nodes) -> tuple[np.ndarray, np.ndarray]:
        nodes = np.asarray(nodes, dtype=np.int64)
        pos = np.searchsorted(self.papers, nodes)
        pos = np.minimum(pos, max(len(self.papers) - 1, 0))
        hit = (self.papers[pos] == nodes) if len(self.papers) else np.zeros(len(nodes), bool)
        return pos, hit

    def defined_for(self, nodes) -> np.ndarray:
        pos, hit = self._pos(nodes)
        return hit & (self.defined[pos] if len(self.papers) else hit)

    def di_for(self, nodes) -> np.ndarray:
        pos, hit = self._pos(nodes)
        if not len(self.papers):
            return np.full(len(hit), np.nan)
        return np.where(hit, self.di[pos], np.nan)

    def score(self, p: int) -> DisruptionScore:
        pos, hit = self._pos([p])
        if not hit[0]:
            raise KeyError(p)
        i = int(pos[0])
        cls = CiterClassification(int(self.n_i[i]), int(self.n_j[i]), int(self.n_k[i]), self.l, self.window)
        return DisruptionScore(p, float(self.di[i]) if self.defined[i] else None, cls)

    def to_frame(self, corpus=None) -> pd.DataFrame:
        ids = corpus.export_ids(self.papers) if corpus is not None else self.papers
        return pd.DataFrame(
            {
                "paper_id": ids,
                "n_i": self.n_i,
                "n_j": self.n_j,
                "n_k": self.n_k,
                "di": self.di,
                "defined": self.defined,
            }
        )


def di_batch(
    graph: CitationGraph,
    papers,
    l: int = 5,
    w=5,
    subthreshold: str = "reclassify",
    threads: int | None = None,
) -> DiTable:
    """DI for every paper in ``papers`` (a CorpusView or node array).

    Rows come back sorted by node ID. Undated papers are skipped with a log
    line. The result does not depend on the thread count.
    """
    if isinstance(papers, np.ndarray) or not hasattr(papers, "corpus"):
        nodes = np.unique(np.asarray(papers, dtype=np.int64))
    else:
        nodes = np.unique(papers.index)
    dated = graph.year[nodes] != NO_YEAR
    if not dated.all():
        log.warning("di_batch: skipping %d undated papers", int((~dated).sum()))
        nodes = nodes[dated]
    prev = numba.get_num_threads()
    if threads:
        numba.set_num_threads(min(int(threads), numba.config.NUMBA_NUM_THREADS))
    try:
        counts = _run(graph, nodes, l, w, subthreshold)
    finally:
        numba.set_num_threads(prev)
    n_i, n_j, n_k = counts[:, 0], counts[:, 1], counts[:, 2]
    den = n_i + n_j + n_k
    defined = den > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        di = np.where(defined, (n_i - n_j) / np.where(defined, den, 1), np.nan)
    return DiTable(nodes, n_i, n_j, n_k, di, defined, l, w)
