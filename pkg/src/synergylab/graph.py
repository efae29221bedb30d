"""Immutable citation graph in compressed-sparse-row form, both directions.

``fwd`` holds references (citing -> cited), ``bwd`` holds citers
(cited -> citing). Each adjacency list is sorted ascending by node ID.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)

NO_YEAR = -1
CACHE_MAGIC = b"SLCG"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sIQQIIQ")


@dataclass(frozen=True, eq=False)
class CitationGraph:
    n_nodes: int
    fwd_ptr: np.ndarray
    fwd_idx: np.ndarray
    bwd_ptr: np.ndarray
    bwd_idx: np.ndarray
    year: np.ndarray
    n_self_loops: int = 0

    @property
    def n_edges(self) -> int:
        return len(self.fwd_idx)

    @property
    def year_sorted(self) -> bool:
        """True when node order is non-decreasing in year, undated nodes last.

        Corpus interning guarantees this; the DI kernel then locates window
        boundaries in each citer list by bisection.
        """
        key = year_key(self.year)
        return bool(np.all(key[1:] >= key[:-1])) if len(key) > 1 else True

    def out_degree(self) -> np.ndarray:
        return np.diff(self.fwd_ptr)

    def in_degree(self) -> np.ndarray:
        return np.diff(self.bwd_ptr)

    def _check(self, p: int) -> None:
        if not 0 <= p < self.n_nodes:
            raise DataError(f"node {p} not in graph")


def year_key(year: np.ndarray) -> np.ndarray:
    """Years as a sort key in which undated nodes compare greater than all."""
    return np.where(year == NO_YEAR, np.int32(2**30), year).astype(np.int32)


def _csr(rows: np.ndarray, cols: np.ndarray, n: int, idx_dtype) -> tuple[np.ndarray, np.ndarray]:
    key = rows.astype(np.int64) * n + cols
    key.sort()
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(key // n, minlength=n), out=ptr[1:])
    idx = (key % n).astype(idx_dtype)
    return ptr, idx


def from_edges(src, dst, n_nodes: int, year=None) -> CitationGraph:
    """Build a graph from raw (citing, cited) arrays; self-loops are dropped."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if len(src) and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n_nodes):
        raise DataError("edge endpoint out of range")
    loops = src == dst
    n_loops = int(loops.sum())
    if n_loops:
        log.info("graph: dropped %d self-citation edges", n_loops)
        src, dst = src[~loops], dst[~loops]
    idx_dtype = np.int32 if n_nodes < 2**31 else np.int64
    fwd_ptr, fwd_idx = _csr(src, dst, n_nodes, idx_dtype)
    # duplicates are removed at ingestion; guard against raw edge lists here
    if len(fwd_idx) > 1:
        rows = np.repeat(np.arange(n_nodes), np.diff(fwd_ptr))
        dup = (rows[1:] == rows[:-1]) & (fwd_idx[1:] == fwd_idx[:-1])
        if dup.any():
            keep = np.concatenate([[True], ~dup])
            src, dst = rows[keep], fwd_idx[keep].astype(np.int64)
            fwd_ptr, fwd_idx = _csr(src, dst, n_nodes, idx_dtype)
        else:
            src, dst = rows, fwd_idx.astype(np.int64)
        del rows
    bwd_ptr, bwd_idx = _csr(dst, src, n_nodes, idx_dtype)
    if year is None:
        year = np.full(n_nodes, NO_YEAR, dtype=np.int32)
    year = np.asarray(year, dtype=np.int32)
    if len(year) != n_nodes:
        raise DataError("year array length does not match node count")
    for a in (fwd_ptr, fwd_idx, bwd_ptr, bwd_idx, year):
        a.setflags(write=False)
    return CitationGraph(n_nodes, fwd_ptr, fwd_idx, bwd_ptr, bwd_idx, year, n_loops)


def build_graph(corpus) -> CitationGraph:
    """Citation graph over all corpus nodes (retained papers and externals)."""
    year = np.full(corpus.n_nodes, NO_YEAR, dtype=np.int32)
    year[: corpus.n_papers] = corpus.year
    return from_edges(corpus.cit_src, corpus.cit_dst, corpus.n_nodes, year)


def references(graph: CitationGraph, p: int) -> np.ndarray:
    graph._check(p)
    return graph.fwd_idx[graph.fwd_ptr[p] : graph.fwd_ptr[p + 1]]


def citers(graph: CitationGraph, p: int) -> np.ndarray:
    graph._check(p)
    return graph.bwd_idx[graph.bwd_ptr[p] : graph.bwd_ptr[p + 1]]


def citers_in_window(graph: CitationGraph, p: int, t: int | None = None, w: float | None = 5) -> np.ndarray:
    """Citers of ``p`` dated within ``[t, t + w]`` (inclusive both ends).

    ``t`` defaults to the year of ``p``; ``w=None`` means an unbounded window.
    Undated citers never qualify.
    """
    graph._check(p)
    if t is None:
        t = int(graph.year[p])
    if graph.year[p] == NO_YEAR:
        raise DataError(f"node {p} has no publication year")
    c = citers(graph, p)
    y = graph.year[c]
    mask = (y != NO_YEAR) & (y >= t)
    if w is not None and np.isfinite(w):
        mask &= y <= t + w
    return c[mask]


@dataclass(frozen=True)
class WindowDiagnostics:
    undated_citers: int
    early_citers: int


def window_diagnostics(graph: CitationGraph, nodes=None) -> WindowDiagnostics:
    """Count citation edges into dated ``nodes`` whose citer is undated or
    dated before the cited paper. Both are excluded from every window."""
    ptr, idx, year = graph.bwd_ptr, graph.bwd_idx, graph.year
    cited = np.repeat(np.arange(graph.n_nodes), np.diff(ptr))
    if nodes is not None:
        keep = np.zeros(graph.n_nodes, dtype=bool)
        keep[np.asarray(nodes)] = True
        m = keep[cited]
        cited, idx = cited[m], idx[m]
    yc = year[cited]
    dated = yc != NO_YEAR
    yq = year[idx]
    undated = int((dated & (yq == NO_YEAR)).sum())
    early = int((dated & (yq != NO_YEAR) & (yq < yc)).sum())
    return WindowDiagnostics(undated, early)


# ---------------------------------------------------------------------------
# binary cache
# ---------------------------------------------------------------------------


def save_graph(graph: CitationGraph, path: str | Path) -> None:
    """Write the graph to a versioned little-endian binary file."""
    width = graph.fwd_idx.dtype.itemsize
    with open(path, "wb") as f:
        f.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, graph.n_nodes, graph.n_edges, width, 0, graph.n_self_loops))
        idx_t = f"<i{width}"
        for arr, dt in (
            (graph.fwd_ptr, "<i8"),
            (graph.fwd_idx, idx_t),
            (graph.bwd_ptr, "<i8"),
            (graph.bwd_idx, idx_t),
            (graph.year, "<i4"),
        ):
            f.write(np.ascontiguousarray(arr, dtype=dt).tobytes())


def load_graph(path: str | Path) -> CitationGraph:
    with open(path, "rb") as f:
        head = f.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise DataError(f"{path}: truncated graph cache")
        magic, version, n, m, width, _, loops = _HEADER.unpack(head)
        if magic != CACHE_MAGIC:
            raise DataError(f"{path}: not a graph cache")
        if version != CACHE_VERSION:
            raise DataError(f"{path}: unsupported cache version {version}")
        idx_t = np.dtype(f"<i{width}")

        def take(count, dt):
            buf = f.read(count * np.dtype(dt).itemsize)
            if len(buf) != count * np.dtype(dt).itemsize:
                raise DataError(f"{path}: truncated graph cache")
            return np.frombuffer(buf, dtype=dt).astype(np.dtype(dt).newbyteorder("="))

        fwd_ptr = take(n + 1, "<i8")
        fwd_idx = take(m, idx_t)
        bwd_ptr = take(n + 1, "<i8")
        bwd_idx = take(m, idx_t)
        year = take(n, "<i4")
    for a in (fwd_ptr, fwd_idx, bwd_ptr, bwd_idx, year):
        a.setflags(write=False)
    return CitationGraph(int(n), fwd_ptr, fwd_idx, bwd_ptr, bwd_idx, year, int(loops))
