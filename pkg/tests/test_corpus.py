import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synergylab.corpus import (
    corpus_from_records,
    filter_complete,
    load_corpus,
    slice,
    write_corpus_tables,
)
from synergylab.errors import DataError


def paper(pid, year=2000, field="Physics", subs="", doc="journal"):
    return {"paper_id": pid, "year": year, "top_field": field, "sub_fields": subs, "doc_type": doc}


def author(aid, label="male", prob=0.9):
    return {"author_id": aid, "gender_label": label, "gender_probability": "" if prob is None else prob}


def byline(pid, aids):
    return [{"paper_id": pid, "author_id": a, "position_index": i} for i, a in enumerate(aids)]


def cite(a, b):
    return {"citing_id": a, "cited_id": b}


@pytest.fixture
def tiny():
    papers = [paper("p1", 2001), paper("p2", 2002, "Biology"), paper("p3", 2003)]
    authors = [author("a1"), author("a2", "female", 0.8)]
    ships = byline("p1", ["a1"]) + byline("p2", ["a2", "a1"]) + byline("p3", ["a2"])
    return papers, authors, ships, [cite("p2", "p1")]


def test_counts_of_identity_ingestion(tiny):
    c = corpus_from_records(*tiny)
    assert c.report.count() == (3, 2, 1)
    assert c.n_papers == 3 and c.n_authors == 2 and c.n_citations == 1


def test_duplicate_citation_removed(tiny):
    papers, authors, ships, cites = tiny
    c = corpus_from_records(papers, authors, ships, cites + [cite("p2", "p1")])
    assert c.n_citations == 1
    assert c.report.duplicate_citations == 1


def test_unknown_author_names_row(tiny):
    papers, authors, ships, cites = tiny
    ships = ships + byline("p3", ["ghost"])
    with pytest.raises(DataError, match=r"row 5.*ghost"):
        corpus_from_records(papers, authors, ships, cites)


def test_missing_column_is_an_error(tmp_path, tiny):
    papers, authors, ships, cites = tiny
    tables = {
        "papers": {k: [p[k] for p in papers] for k in ("paper_id", "year", "top_field", "sub_fields")},
        "authors": {k: [a[k] for a in authors] for k in authors[0]},
        "authorships": {k: [s[k] for s in ships] for k in ships[0]},
        "citations": {k: [x[k] for x in cites] for k in cites[0]},
    }
    write_corpus_tables(tables, tmp_path)
    with pytest.raises(DataError, match="doc_type"):
        load_corpus(tmp_path)


def test_external_citation_endpoint_kept(tiny):
    papers, authors, ships, cites = tiny
    c = corpus_from_records(papers, authors, ships, cites + [cite("p3", "outside")])
    assert c.report.external_nodes == 1
    ext = c.intern("outside")
    assert ext >= c.n_papers
    assert c.node_id(ext) == "outside"


def test_csv_roundtrip_matches_records(tmp_path, tiny):
    papers, authors, ships, cites = tiny
    tables = {
        "papers": {k: [p[k] for p in papers] for k in papers[0]},
        "authors": {k: [a[k] for a in authors] for k in authors[0]},
        "authorships": {k: [s[k] for s in ships] for k in ships[0]},
        "citations": {k: [x[k] for x in cites] for k in cites[0]},
    }
    write_corpus_tables(tables, tmp_path)
    c = load_corpus(tmp_path)
    ref = corpus_from_records(*tiny)
    assert c.export_ids(range(c.n_nodes)) == ref.export_ids(range(ref.n_nodes))
    assert c.paper(c.intern("p2")).authors == ("a2", "a1")
    np.testing.assert_array_equal(c.year, ref.year)


def test_unknown_gender_author_excludes_paper(tiny):
    papers, authors, ships, cites = tiny
    authors = authors + [author("a3", "unknown", None)]
    ships = ships + byline("p4", ["a1", "a3"])
    c = corpus_from_records(papers + [paper("p4", 2004)], authors, ships, cites)
    kept = filter_complete(c, {"gender"}).paper_ids()
    assert "p4" not in kept
    assert sorted(kept) == ["p1", "p2", "p3"]


def test_empty_requirement_and_complete_corpus_unchanged(tiny):
    c = corpus_from_records(*tiny)
    assert len(filter_complete(c, set())) == c.n_papers
    assert len(filter_complete(c, {"gender", "year", "top_field"})) == c.n_papers


def test_unknown_indicator_rejected(tiny):
    with pytest.raises(ValueError):
        filter_complete(corpus_from_records(*tiny), {"shoe_size"})


@st.composite
def corpora(draw):
    n_auth = draw(st.integers(1, 6))
    labels = draw(st.lists(st.sampled_from(["male", "female", "unknown"]), min_size=n_auth, max_size=n_auth))
    probs = draw(st.lists(st.floats(0, 1), min_size=n_auth, max_size=n_auth))
    authors = [author(f"a{i}", lab, None if lab == "unknown" else round(p, 3))
               for i, (lab, p) in enumerate(zip(labels, probs))]
    n_pap = draw(st.integers(1, 12))
    papers, ships = [], []
    for j in range(n_pap):
        year = draw(st.integers(1960, 2020))
        papers.append(paper(f"p{j}", year, draw(st.sampled_from(["Physics", "Biology", "Geology"]))))
        team = draw(st.lists(st.integers(0, n_auth - 1), min_size=1, max_size=4))
        ships += byline(f"p{j}", [f"a{i}" for i in team])
    return corpus_from_records(papers, authors, ships, [])


@settings(max_examples=40, deadline=None)
@given(corpora())
def test_filter_is_idempotent(c):
    once = filter_complete(c, {"gender", "year"})
    twice = filter_complete(once, {"gender", "year"})
    np.testing.assert_array_equal(once.index, twice.index)


@settings(max_examples=40, deadline=None)
@given(corpora())
def test_interning_is_a_bijection(c):
    ids = c.export_ids(np.arange(c.n_nodes))
    assert len(set(ids)) == c.n_nodes
    assert [c.intern(s) for s in ids] == list(range(c.n_nodes))


@settings(max_examples=40, deadline=None)
@given(corpora(), st.lists(st.integers(1961, 2020), max_size=4, unique=True))
def test_year_partition_counts_sum(c, cuts):
    edges = [1960, *sorted(cuts), 2021]
    parts = [len(slice(c, years=(lo, hi - 1))) for lo, hi in zip(edges[:-1], edges[1:])]
    assert sum(parts) == c.n_papers
