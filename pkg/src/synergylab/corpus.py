"""Corpus ingestion, validation, interning and slicing.

Papers, authors, authorships and citations arrive as delimited text files.
Everything is interned to dense integer IDs and kept columnar (numpy arrays)
so that a corpus of millions of papers stays cheap to hold and to share.

Interning order for papers is (year, file order), with undated papers last.
Citation endpoints that are not retained papers become *external* nodes,
numbered after the papers, so reference sets stay complete for DI.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pyarrow as pa
import pyarrow.compute as pc
import pyarrow.csv as pacsv

from .errors import ConfigError, DataError

log = logging.getLogger(__name__)

# MAG / SciSciNet level-0 fields.
TOP_FIELDS: tuple[str, ...] = (
    "Art",
    "Biology",
    "Business",
    "Chemistry",
    "Computer science",
    "Economics",
    "Engineering",
    "Environmental science",
    "Geography",
    "Geology",
    "History",
    "Materials science",
    "Mathematics",
    "Medicine",
    "Philosophy",
    "Physics",
    "Political science",
    "Psychology",
    "Sociology",
)

DOC_TYPES: tuple[str, ...] = (
    "journal",
    "conference",
    "book",
    "book_chapter",
    "dataset",
    "repository",
    "thesis",
)
_DOC_ALIASES = {
    "journal": "journal",
    "journalarticle": "journal",
    "article": "journal",
    "conference": "conference",
    "conferencepaper": "conference",
    "proceedings": "conference",
    "book": "book",
    "bookchapter": "book_chapter",
    "chapter": "book_chapter",
    "dataset": "dataset",
    "repository": "repository",
    "preprint": "repository",
    "thesis": "thesis",
}

GENDER_UNKNOWN, GENDER_MALE, GENDER_FEMALE = 0, 1, 2
GENDER_LABELS = ("unknown", "male", "female")
_GENDER_ALIASES = {"": 0, "unknown": 0, "u": 0, "male": 1, "m": 1, "female": 2, "f": 2}

NO_YEAR = -1
NO_FIELD = -1

INDICATORS = frozenset({"gender", "top_field", "year", "di-computable"})

PAPER_COLUMNS = ("paper_id", "year", "top_field", "sub_fields", "doc_type", "atypicality_z")
AUTHOR_COLUMNS = ("author_id", "gender_label", "gender_probability", "first_pub_year")
AUTHORSHIP_COLUMNS = ("paper_id", "author_id", "position_index")
CITATION_COLUMNS = ("citing_id", "cited_id")
_REQUIRED = {
    "papers": ("paper_id", "year", "top_field", "sub_fields", "doc_type"),
    "authors": ("author_id", "gender_label", "gender_probability"),
    "authorships": AUTHORSHIP_COLUMNS,
    "citations": CITATION_COLUMNS,
}
_ALL_COLUMNS = {
    "papers": PAPER_COLUMNS,
    "authors": AUTHOR_COLUMNS,
    "authorships": AUTHORSHIP_COLUMNS,
    "citations": CITATION_COLUMNS,
}


def field_code(name: str | int) -> int:
    """Resolve a top-level field name (case-insensitive) or code to its code."""
    if isinstance(name, (int, np.integer)):
        if 0 <= int(name) < len(TOP_FIELDS):
            return int(name)
        raise DataError(f"unknown field code {name!r}")
    key = str(name).strip().lower()
    for i, f in enumerate(TOP_FIELDS):
        if f.lower() == key:
            return i
    raise DataError(f"unknown field code {name!r}")


@dataclass
class Schema:
    """Column mapping (canonical name -> name in the file) per input table."""

    papers: dict[str, str] = field(default_factory=dict)
    authors: dict[str, str] = field(default_factory=dict)
    authorships: dict[str, str] = field(default_factory=dict)
    citations: dict[str, str] = field(default_factory=dict)
    delimiter: str | None = None

    def column(self, table: str, canonical: str) -> str:
        return getattr(self, table).get(canonical, canonical)

    @classmethod
    def load(cls, path: str | Path) -> "Schema":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if path.suffix == ".json":
            raw = json.loads(text)
        else:
            from ._toml import loads

            raw = loads(text)
        unknown = set(raw) - {"papers", "authors", "authorships", "citations", "delimiter"}
        if unknown:
            raise ConfigError(f"schema {path}: unknown sections {sorted(unknown)}")
        return cls(**raw)


@dataclass(frozen=True)
class AuthorRecord:
    author_id: str
    gender_label: str
    gender_probability: float | None
    first_pub_year: int | None = None


@dataclass(frozen=True)
class PaperRecord:
    paper_id: str
    year: int | None
    top_field: str | None
    sub_fields: frozenset[str]
    doc_type: str
    authors: tuple[str, ...]
    atypicality_z: float | None = None


@dataclass
class LoadReport:
    papers: int = 0
    authors: int = 0
    authorships: int = 0
    citations: int = 0
    external_nodes: int = 0
    duplicate_citations: int = 0
    dropped_authorships: int = 0
    malformed: dict[str, int] = field(default_factory=dict)

    def count(self) -> tuple[int, int, int]:
        return (self.papers, self.authors, self.citations)

    def as_dict(self) -> dict:
        return {
            "papers": self.papers,
            "authors": self.authors,
            "authorships": self.authorships,
            "citations": self.citations,
            "external_nodes": self.external_nodes,
            "duplicate_citations": self.duplicate_citations,
            "dropped_authorships": self.dropped_authorships,
            "malformed": dict(sorted(self.malformed.items())),
        }


class Corpus:
    """Columnar, immutable corpus with interned IDs.

    Paper node IDs are ``0..n_papers-1``; external citation endpoints follow
    as ``n_papers..n_nodes-1``. Author IDs are ``0..n_authors-1``.
    """

    def __init__(
        self,
        paper_ids: pa.Array,
        external_ids: pa.Array,
        year: np.ndarray,
        top_field: np.ndarray,
        sub_ptr: np.ndarray,
        sub_idx: np.ndarray,
        sub_codes: Sequence[str],
        doc_type: np.ndarray,
        atypicality: np.ndarray,
        auth_ptr: np.ndarray,
        auth_idx: np.ndarray,
        author_ids: pa.Array,
        gender: np.ndarray,
        gender_prob: np.ndarray,
        first_pub_year: np.ndarray,
        cit_src: np.ndarray,
        cit_dst: np.ndarray,
        report: LoadReport | None = None,
        year_range: tuple[int, int] = (1960, 2020),
    ):
        self.paper_ids = paper_ids
        self.external_ids = external_ids
        self.year = year
        self.top_field = top_field
        self.sub_ptr = sub_ptr
        self.sub_idx = sub_idx
        self.sub_codes = tuple(sub_codes)
        self.doc_type = doc_type
        self.atypicality = atypicality
        self.auth_ptr = auth_ptr
        self.auth_idx = auth_idx
        self.author_ids = author_ids
        self.gender = gender
        self.gender_prob = gender_prob
        self.first_pub_year = first_pub_year
        self.cit_src = cit_src
        self.cit_dst = cit_dst
        self.report = report or LoadReport()
        self.year_range = year_range
        for arr in (year, top_field, doc_type, atypicality, auth_ptr, auth_idx, cit_src, cit_dst):
            arr.setflags(write=False)
        self._paper_lookup: dict[str, int] | None = None

    # sizes ---------------------------------------------------------------
    @property
    def n_papers(self) -> int:
        return len(self.year)

    @property
    def n_authors(self) -> int:
        return len(self.gender)

    @property
    def n_nodes(self) -> int:
        return self.n_papers + len(self.external_ids)

    @property
    def n_citations(self) -> int:
        return len(self.cit_src)

    @property
    def field_catalog(self) -> dict:
        return {"top": list(TOP_FIELDS), "sub": list(self.sub_codes)}

    # record access -------------------------------------------------------
    def authors_of(self, p: int) -> np.ndarray:
        return self.auth_idx[self.auth_ptr[p] : self.auth_ptr[p + 1]]

    def node_id(self, i: int) -> str:
        if i < self.n_papers:
            return self.paper_ids[i].as_py()
        return self.external_ids[i - self.n_papers].as_py()

    def export_ids(self, nodes: Iterable[int] | np.ndarray) -> list[str]:
        nodes = np.asarray(nodes, dtype=np.int64)
        all_ids = pa.chunked_array([self.paper_ids, self.external_ids], type=pa.string())
        return all_ids.take(pa.array(nodes)).to_pylist()

    def intern(self, paper_id: str) -> int:
        if self._paper_lookup is None:
            ids = self.paper_ids.to_pylist() + self.external_ids.to_pylist()
            self._paper_lookup = {s: i for i, s in enumerate(ids)}
        try:
            return self._paper_lookup[paper_id]
        except KeyError:
            raise DataError(f"unknown paper {paper_id!r}") from None

    def paper(self, p: int) -> PaperRecord:
        y = int(self.year[p])
        f = int(self.top_field[p])
        subs = self.sub_idx[self.sub_ptr[p] : self.sub_ptr[p + 1]]
        aty = float(self.atypicality[p])
        return PaperRecord(
            paper_id=self.node_id(p),
            year=None if y == NO_YEAR else y,
            top_field=None if f == NO_FIELD else TOP_FIELDS[f],
            sub_fields=frozenset(self.sub_codes[s] for s in subs),
            doc_type=DOC_TYPES[int(self.doc_type[p])],
            authors=tuple(self.author_ids[int(a)].as_py() for a in self.authors_of(p)),
            atypicality_z=None if np.isnan(aty) else aty,
        )

    def author(self, a: int) -> AuthorRecord:
        prob = float(self.gender_prob[a])
        fy = int(self.first_pub_year[a])
        return AuthorRecord(
            author_id=self.author_ids[a].as_py(),
            gender_label=GENDER_LABELS[int(self.gender[a])],
            gender_probability=None if np.isnan(prob) else prob,
            first_pub_year=None if fy == NO_YEAR else fy,
        )

    def view(self) -> "CorpusView":
        return CorpusView(self, np.arange(self.n_papers, dtype=np.int64))

    def __repr__(self) -> str:
        return (
            f"Corpus(papers={self.n_papers}, authors={self.n_authors}, "
            f"citations={self.n_citations}, external={len(self.external_ids)})"
        )


class CorpusView:
    """A subset of a corpus's papers; holds only a sorted index array."""

    def __init__(self, corpus: Corpus, index: np.ndarray):
        self.corpus = corpus
        self.index = np.asarray(index, dtype=np.int64)
        self.index.setflags(write=False)

    def __len__(self) -> int:
        return len(self.index)

    def __iter__(self):
        return iter(self.index.tolist())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CorpusView)
            and other.corpus is self.corpus
            and np.array_equal(other.index, self.index)
        )

    @property
    def year(self) -> np.ndarray:
        return self.corpus.year[self.index]

    @property
    def top_field(self) -> np.ndarray:
        return self.corpus.top_field[self.index]

    def paper_ids(self) -> list[str]:
        return self.corpus.export_ids(self.index)

    def __repr__(self) -> str:
        return f"CorpusView(n={len(self)} of {self.corpus.n_papers})"


def as_view(x: Corpus | CorpusView) -> CorpusView:
    return x if isinstance(x, CorpusView) else x.view()


def slice(
    x: Corpus | CorpusView,
    field: str | int | None = None,
    years: tuple[int, int] | None = None,
) -> CorpusView:
    """Restrict to one top-level field and/or an inclusive year range."""
    v = as_view(x)
    mask = np.ones(len(v), dtype=bool)
    if field is not None:
        mask &= v.top_field == field_code(field)
    if years is not None:
        t0, t1 = years
        if t0 > t1:
            raise ValueError(f"empty year range {years}")
        y = v.year
        mask &= (y >= t0) & (y <= t1)
    return CorpusView(v.corpus, v.index[mask])


def gender_valid(corpus: Corpus, threshold: float = 0.5) -> np.ndarray:
    """Per-author boolean: gender label known and probability >= threshold."""
    prob = np.nan_to_num(corpus.gender_prob, nan=-1.0)
    return (corpus.gender != GENDER_UNKNOWN) & (prob >= threshold)


def filter_complete(
    x: Corpus | CorpusView,
    required: Iterable[str],
    di=None,
    gender_threshold: float = 0.5,
) -> CorpusView:
    """Keep papers with valid values for every required indicator.

    ``di`` (a DI table) is needed only when ``"di-computable"`` is required;
    a paper passes that check when its DI is defined.
    """
    required = set(required)
    bad = required - INDICATORS
    if bad:
        raise ValueError(f"unknown indicators {sorted(bad)}")
    v = as_view(x)
    c = v.corpus
    keep = np.ones(len(v), dtype=bool)
    if "year" in required:
        keep &= v.year != NO_YEAR
    if "top_field" in required:
        keep &= v.top_field != NO_FIELD
    if "gender" in required:
        bad_author = ~gender_valid(c, gender_threshold)
        n_auth = np.diff(c.auth_ptr)
        owner = np.repeat(np.arange(c.n_papers), n_auth)
        n_bad = np.bincount(owner, weights=bad_author[c.auth_idx], minlength=c.n_papers)
        keep &= ((n_bad == 0) & (n_auth > 0))[v.index]
    if "di-computable" in required:
        if di is None:
            raise ValueError("'di-computable' requires a DI table")
        keep &= di.defined_for(v.index)
    out = CorpusView(c, v.index[keep])
    log.info("filter_complete: kept %d of %d papers", len(out), len(v))
    return out


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------


def _header(path: Path, delimiter: str) -> list[str]:
    with open(path, newline="", encoding="utf-8-sig") as f:
        row = next(csv.reader(f, delimiter=delimiter), None)
    if not row:
        raise DataError(f"{path.name}: missing header row")
    return [c.strip() for c in row]


def _delimiter(path: Path, schema: Schema) -> str:
    if schema.delimiter:
        return schema.delimiter
    return "\t" if path.suffix.lower() in (".tsv", ".tab") else ","


def _read(path: Path, table: str, schema: Schema, report: LoadReport) -> dict[str, pa.Array]:
    """Read one table as string columns keyed by canonical name."""
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    delim = _delimiter(path, schema)
    header = _header(path, delim)
    cols: dict[str, str] = {}
    for canon in _ALL_COLUMNS[table]:
        actual = schema.column(table, canon)
        if actual in header:
            cols[canon] = actual
        elif canon in _REQUIRED[table]:
            raise DataError(f"{path.name}: missing required column {actual!r}")
    bad_rows = []

    def on_invalid(row):
        bad_rows.append(row.number)
        return "skip"

    tab = pacsv.read_csv(
        path,
        read_options=pacsv.ReadOptions(encoding="utf8"),
        parse_options=pacsv.ParseOptions(delimiter=delim, invalid_row_handler=on_invalid),
        convert_options=pacsv.ConvertOptions(
            include_columns=list(cols.values()),
            column_types={a: pa.string() for a in cols.values()},
            strings_can_be_null=False,
            quoted_strings_can_be_null=False,
        ),
    )
    if bad_rows:
        _malformed(report, f"{table}:bad_row_shape", len(bad_rows), path.name)
    out = {}
    for canon, actual in cols.items():
        out[canon] = pc.utf8_trim_whitespace(tab[actual].combine_chunks())
    return out


def _malformed(report: LoadReport, reason: str, n: int, where: str, example=None) -> None:
    if n <= 0:
        return
    report.malformed[reason] = report.malformed.get(reason, 0) + int(n)
    extra = f" (e.g. row {example})" if example is not None else ""
    log.warning("%s: skipped %d malformed rows [%s]%s", where, n, reason, extra)


def _parse_numeric(arr: pa.Array, typ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Parse strings to numbers. Returns (values, present, invalid)."""
    present = pc.not_equal(arr, "").to_numpy(zero_copy_only=False)
    filled = pc.if_else(pc.equal(arr, ""), "0", arr)
    try:
        vals = pc.cast(filled, typ).to_numpy(zero_copy_only=False)
        invalid = np.zeros(len(arr), dtype=bool)
    except (pa.ArrowInvalid, pa.ArrowNotImplementedError):
        import pandas as pd

        s = pd.to_numeric(pd.Series(filled.to_pylist(), dtype=object), errors="coerce")
        invalid = s.isna().to_numpy() & present
        if typ == pa.int64():
            ok = s.notna() & (s == s.round())
            invalid |= present & ~ok.to_numpy()
            vals = s.where(ok, 0).astype(np.int64).to_numpy()
        else:
            vals = s.fillna(0.0).to_numpy(dtype=np.float64)
    return vals, present, invalid


def _lookup(arr: pa.Array, table: Mapping[str, int]) -> np.ndarray:
    """Map strings through ``table``; unknown strings become -1."""
    keys = list(table)
    codes = np.array([table[k] for k in keys] + [-1], dtype=np.int8)
    hit = pc.index_in(arr, value_set=pa.array(keys, type=pa.string()))
    return codes[hit.fill_null(len(keys)).to_numpy(zero_copy_only=False)]


def _first_index(mask: np.ndarray):
    idx = np.flatnonzero(mask)
    return int(idx[0]) + 1 if len(idx) else None


def load_corpus(
    paths: Mapping[str, str | Path] | str | Path,
    schema: Schema | None = None,
    year_range: tuple[int, int] = (1960, 2020),
) -> Corpus:
    """Load ``papers``, ``authors``, ``authorships`` and ``citations`` tables.

    ``paths`` is either a directory holding ``papers.csv`` etc. or a mapping
    from table name to file path.
    """
    schema = schema or Schema()
    if isinstance(paths, (str, Path)):
        d = Path(paths)
        resolved = {}
        for t in _ALL_COLUMNS:
            cands = [d / f"{t}.csv", d / f"{t}.tsv"]
            resolved[t] = next((c for c in cands if c.exists()), cands[0])
        paths = resolved
    missing = set(_ALL_COLUMNS) - set(paths)
    if missing:
        raise ConfigError(f"no path given for tables {sorted(missing)}")
    report = LoadReport()
    raw = {t: _read(Path(paths[t]), t, schema, report) for t in _ALL_COLUMNS}
    return build_corpus(raw, report=report, year_range=year_range)


def corpus_from_records(
    papers: Sequence[Mapping],
    authors: Sequence[Mapping],
    authorships: Sequence[Mapping],
    citations: Sequence[Mapping] = (),
    year_range: tuple[int, int] = (1960, 2020),
) -> Corpus:
    """Build a corpus from in-memory row dicts (all values stringified)."""

    def cols(rows, names, required):
        out = {}
        for n in names:
            if rows and n not in rows[0] and n not in required:
                continue
            vals = ["" if r.get(n) is None else str(r.get(n)) for r in rows]
            out[n] = pa.array(vals, type=pa.string())
        return out

    raw = {
        "papers": cols(list(papers), PAPER_COLUMNS, _REQUIRED["papers"]),
        "authors": cols(list(authors), AUTHOR_COLUMNS, _REQUIRED["authors"]),
        "authorships": cols(list(authorships), AUTHORSHIP_COLUMNS, AUTHORSHIP_COLUMNS),
        "citations": cols(list(citations), CITATION_COLUMNS, CITATION_COLUMNS),
    }
    return build_corpus(raw, year_range=year_range)


def _dedup_first(ids: pa.Array) -> np.ndarray:
    """Boolean mask marking the first occurrence of each value."""
    uniq = pc.unique(ids)
    first = pc.index_in(uniq, value_set=ids).to_numpy(zero_copy_only=False)
    mask = np.zeros(len(ids), dtype=bool)
    mask[first] = True
    return mask


def build_corpus(
    raw: dict[str, dict[str, pa.Array]],
    report: LoadReport | None = None,
    year_range: tuple[int, int] = (1960, 2020),
) -> Corpus:
    report = report or LoadReport()
    y0, y1 = year_range

    # -- authors
    A = raw["authors"]
    aid = A["author_id"]
    n_a = len(aid)
    bad = np.zeros(n_a, dtype=bool)
    empty = pc.equal(aid, "").to_numpy(zero_copy_only=False)
    _malformed(report, "authors:empty_id", empty.sum(), "authors", _first_index(empty))
    bad |= empty
    dup = ~_dedup_first(aid) & ~bad
    _malformed(report, "authors:duplicate_id", dup.sum(), "authors", _first_index(dup))
    bad |= dup
    gcode = _lookup(pc.utf8_lower(A["gender_label"]), _GENDER_ALIASES)
    badg = (gcode < 0) & ~bad
    _malformed(report, "authors:bad_gender_label", badg.sum(), "authors", _first_index(badg))
    bad |= badg
    prob, present, invalid = _parse_numeric(A["gender_probability"], pa.float64())
    invalid |= present & ~((prob >= 0) & (prob <= 1))
    badp = invalid & ~bad
    _malformed(report, "authors:bad_probability", badp.sum(), "authors", _first_index(badp))
    bad |= badp
    prob = np.where(present & ~invalid, prob, np.nan)
    missing_prob = (gcode > 0) & np.isnan(prob) & ~bad
    _malformed(report, "authors:missing_probability", missing_prob.sum(), "authors")
    bad |= missing_prob
    prob = np.where(gcode == GENDER_UNKNOWN, np.nan, prob)
    if "first_pub_year" in A:
        fy, fpres, finv = _parse_numeric(A["first_pub_year"], pa.int64())
        fy = np.where(fpres & ~finv, fy, NO_YEAR)
    else:
        fy = np.full(n_a, NO_YEAR, dtype=np.int64)
    keep_a = np.flatnonzero(~bad)
    author_ids = aid.take(pa.array(keep_a))
    gender = gcode[keep_a]
    gender_prob = prob[keep_a].astype(np.float64)
    first_pub_year = fy[keep_a].astype(np.int32)

    # -- papers
    P = raw["papers"]
    pid = P["paper_id"]
    n_p = len(pid)
    bad = pc.equal(pid, "").to_numpy(zero_copy_only=False)
    _malformed(report, "papers:empty_id", bad.sum(), "papers", _first_index(bad))
    dup = ~_dedup_first(pid) & ~bad
    _malformed(report, "papers:duplicate_id", dup.sum(), "papers", _first_index(dup))
    bad |= dup
    yr, ypres, yinv = _parse_numeric(P["year"], pa.int64())
    ybad = (yinv | (ypres & ((yr < y0) | (yr > y1)))) & ~bad
    _malformed(report, "papers:bad_year", ybad.sum(), "papers", _first_index(ybad))
    bad |= ybad
    yr = np.where(ypres, yr, NO_YEAR)
    tf_norm = pc.utf8_lower(P["top_field"])
    tf = pc.index_in(tf_norm, value_set=pa.array([f.lower() for f in TOP_FIELDS]))
    tf = tf.fill_null(NO_FIELD).to_numpy(zero_copy_only=False)
    tf_present = pc.not_equal(tf_norm, "").to_numpy(zero_copy_only=False)
    fbad = tf_present & (tf == NO_FIELD) & ~bad
    _malformed(report, "papers:unknown_top_field", fbad.sum(), "papers", _first_index(fbad))
    bad |= fbad
    dt_norm = pc.replace_substring_regex(pc.utf8_lower(P["doc_type"]), r"[^a-z]", "")
    dt = _lookup(dt_norm, {k: DOC_TYPES.index(v) for k, v in _DOC_ALIASES.items()})
    dbad = (dt < 0) & ~bad
    _malformed(report, "papers:unknown_doc_type", dbad.sum(), "papers", _first_index(dbad))
    bad |= dbad
    if "atypicality_z" in P:
        aty, apres, ainv = _parse_numeric(P["atypicality_z"], pa.float64())
        abad = ainv & ~bad
        _malformed(report, "papers:bad_atypicality", abad.sum(), "papers", _first_index(abad))
        bad |= abad
        aty = np.where(apres & ~ainv, aty, np.nan)
    else:
        aty = np.full(n_p, np.nan)

    # -- authorships (needed before interning: papers without authors drop)
    S = raw["authorships"]
    s_pid, s_aid = S["paper_id"], S["author_id"]
    pos, ppres, pinv = _parse_numeric(S["position_index"], pa.int64())
    sbad = pinv | ~ppres
    _malformed(report, "authorships:bad_position", sbad.sum(), "authorships", _first_index(sbad))
    a_of = pc.index_in(s_aid, value_set=author_ids).fill_null(-1).to_numpy(zero_copy_only=False)
    p_any = pc.index_in(s_pid, value_set=pid).fill_null(-1).to_numpy(zero_copy_only=False)
    dangling = ((a_of < 0) | (p_any < 0)) & ~sbad
    if dangling.any():
        i = int(np.flatnonzero(dangling)[0])
        what = "author" if a_of[i] < 0 else "paper"
        raise DataError(
            f"authorships row {i + 1}: unknown {what} "
            f"(paper_id={s_pid[i].as_py()!r}, author_id={s_aid[i].as_py()!r})"
        )
    # authorships of papers dropped as malformed are dropped too
    s_keep = ~sbad & ~bad[np.maximum(p_any, 0)]
    report.dropped_authorships = int((~sbad & ~s_keep).sum())
    has_auth = np.zeros(n_p, dtype=bool)
    has_auth[p_any[s_keep]] = True
    nob = ~has_auth & ~bad
    _malformed(report, "papers:no_authors", nob.sum(), "papers", _first_index(nob))
    bad |= nob

    # -- intern papers: (year, file order), undated last
    keep_p = np.flatnonzero(~bad)
    ykey = np.where(yr[keep_p] == NO_YEAR, np.iinfo(np.int64).max, yr[keep_p])
    keep_p = keep_p[np.argsort(ykey, kind="stable")]
    new_id = np.full(n_p, -1, dtype=np.int64)
    new_id[keep_p] = np.arange(len(keep_p))
    paper_ids = pid.take(pa.array(keep_p))
    n_papers = len(keep_p)

    # sub-fields
    subs = pc.split_pattern(P["sub_fields"].take(pa.array(keep_p)), ";")
    flat = pc.utf8_trim_whitespace(pc.list_flatten(subs))
    lens = pc.list_value_length(subs).to_numpy(zero_copy_only=False).astype(np.int64)
    nonempty = pc.not_equal(flat, "").to_numpy(zero_copy_only=False)
    owner = np.repeat(np.arange(n_papers), lens)[nonempty]
    flat = flat.filter(pa.array(nonempty))
    sub_codes = sorted(set(pc.unique(flat).to_pylist()))
    sidx = pc.index_in(flat, value_set=pa.array(sub_codes, type=pa.string()))
    sidx = sidx.to_numpy(zero_copy_only=False).astype(np.int32)
    key = np.unique(owner.astype(np.int64) * (len(sub_codes) + 1) + sidx)
    owner, sidx = key // (len(sub_codes) + 1), (key % (len(sub_codes) + 1)).astype(np.int32)
    sub_ptr = np.zeros(n_papers + 1, dtype=np.int64)
    np.cumsum(np.bincount(owner, minlength=n_papers), out=sub_ptr[1:])

    # byline: sort kept authorships by (paper, position, row)
    rows = np.flatnonzero(s_keep)
    sp = new_id[p_any[rows]]
    order = np.lexsort((rows, pos[rows], sp))
    rows = rows[order]
    auth_idx = a_of[rows].astype(np.int32)
    auth_ptr = np.zeros(n_papers + 1, dtype=np.int64)
    np.cumsum(np.bincount(sp, minlength=n_papers), out=auth_ptr[1:])

    # -- citations
    C = raw["citations"]
    c_src, c_dst = C["citing_id"], C["cited_id"]
    cbad = pc.or_(pc.equal(c_src, ""), pc.equal(c_dst, "")).to_numpy(zero_copy_only=False)
    _malformed(report, "citations:empty_id", cbad.sum(), "citations", _first_index(cbad))
    if cbad.any():
        m = pa.array(~cbad)
        c_src, c_dst = c_src.filter(m), c_dst.filter(m)
    src = pc.index_in(c_src, value_set=paper_ids).fill_null(-1).to_numpy(zero_copy_only=False)
    dst = pc.index_in(c_dst, value_set=paper_ids).fill_null(-1).to_numpy(zero_copy_only=False)
    src = src.astype(np.int64)
    dst = dst.astype(np.int64)
    ext_pool = pa.chunked_array(
        [c_src.filter(pa.array(src < 0)), c_dst.filter(pa.array(dst < 0))], type=pa.string()
    )
    external_ids = pc.unique(ext_pool) if len(ext_pool) else pa.array([], pa.string())
    if isinstance(external_ids, pa.ChunkedArray):
        external_ids = external_ids.combine_chunks()
    if (src < 0).any():
        e = pc.index_in(c_src.filter(pa.array(src < 0)), value_set=external_ids)
        src[src < 0] = e.to_numpy(zero_copy_only=False) + n_papers
    if (dst < 0).any():
        e = pc.index_in(c_dst.filter(pa.array(dst < 0)), value_set=external_ids)
        dst[dst < 0] = e.to_numpy(zero_copy_only=False) + n_papers
    n_nodes = n_papers + len(external_ids)
    key = np.unique(src * n_nodes + dst)
    report.duplicate_citations = int(len(src) - len(key))
    if report.duplicate_citations:
        log.info("citations: removed %d duplicate rows", report.duplicate_citations)
    idx_t = np.int32 if n_nodes < 2**31 else np.int64
    cit_src = (key // n_nodes).astype(idx_t)
    cit_dst = (key % n_nodes).astype(idx_t)
    del key

    report.papers = n_papers
    report.authors = len(gender)
    report.authorships = len(auth_idx)
    report.citations = len(cit_src)
    report.external_nodes = len(external_ids)
    log.info(
        "loaded %d papers, %d authors, %d authorships, %d citations (%d external nodes)",
        report.papers, report.authors, report.authorships, report.citations, report.external_nodes,
    )
    return Corpus(
        paper_ids=paper_ids,
        external_ids=external_ids,
        year=yr[keep_p].astype(np.int32),
        top_field=tf[keep_p].astype(np.int8),
        sub_ptr=sub_ptr,
        sub_idx=sidx,
        sub_codes=sub_codes,
        doc_type=dt[keep_p],
        atypicality=aty[keep_p].astype(np.float64),
        auth_ptr=auth_ptr,
        auth_idx=auth_idx,
        author_ids=author_ids,
        gender=gender,
        gender_prob=gender_prob,
        first_pub_year=first_pub_year,
        cit_src=cit_src,
        cit_dst=cit_dst,
        report=report,
        year_range=year_range,
    )


def write_corpus_tables(tables: Mapping[str, Mapping[str, Sequence]], out_dir: str | Path) -> dict[str, Path]:
    """Write column dicts as the four canonical CSV files. Returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, cols in tables.items():
        tab = pa.table({k: pa.array(v) for k, v in cols.items()})
        p = out_dir / f"{name}.csv"
        pacsv.write_csv(tab, p, write_options=pacsv.WriteOptions(quoting_style="needed"))
        paths[name] = p
    return paths
