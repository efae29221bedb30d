import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import di_oracle, random_citation_graph
from synergylab.disruption import classify_citers, di_batch, di_l, di_value
from synergylab.errors import DataError
from synergylab.graph import NO_YEAR, from_edges
from synergylab.synthlab import gen_citation_structure

# focal F, references R1 R2, citers C1..C3 of F, K1 citing only R2
F, R1, R2, C1, C2, C3, K1 = range(7)
TOY_YEAR = [2000, 1995, 1995, 2001, 2002, 2003, 2004]
TOY = ([F, F, C1, C2, C2, C3, K1], [R1, R2, F, F, R1, F, R2])


def toy():
    return from_edges(*TOY, 7, TOY_YEAR)


def test_toy_graph_l1():
    cls = classify_citers(toy(), F, l=1)
    assert (cls.n_i, cls.n_j, cls.n_k) == (2, 1, 1)
    assert (cls.n_i, cls.n_j, cls.n_k) == di_oracle(np.array(TOY[0]), np.array(TOY[1]), np.array(TOY_YEAR), F, 1, 5)
    assert di_l(toy(), F, l=1).di == 0.25


def test_toy_graph_l2_folds_subthreshold_into_i():
    cls = classify_citers(toy(), F, l=2)
    assert (cls.n_i, cls.n_j, cls.n_k) == (3, 0, 1)
    drop = classify_citers(toy(), F, l=2, subthreshold="drop")
    assert (drop.n_i, drop.n_j, drop.n_k) == (2, 0, 1)


def test_pure_cases():
    g = from_edges([1, 2, 3], [0, 0, 0], 4, [2000, 2001, 2001, 2002])
    s = di_l(g, 0)
    assert (s.classification.n_i, s.classification.n_j, s.classification.n_k) == (3, 0, 0)
    assert s.di == 1.0
    # four citers each citing the focal paper and both of its references
    src = [0, 0] + [c for c in (3, 4, 5, 6) for _ in range(3)]
    dst = [1, 2] + [0, 1, 2] * 4
    g = from_edges(src, dst, 7, [2000, 1990, 1990, 2001, 2001, 2002, 2003])
    s = di_l(g, 0, l=2)
    assert (s.classification.n_i, s.classification.n_j, s.classification.n_k) == (0, 4, 0)
    assert s.di == -1.0


def test_undefined_without_citers():
    g = from_edges([0], [1], 2, [2000, 1990])
    s = di_l(g, 0)
    assert not s.defined and s.di is None
    assert di_value(0, 0, 0) is None
    tab = di_batch(g, [0])
    assert not tab.defined[0] and math.isnan(tab.di[0])


def test_undated_focal_is_an_error():
    g = from_edges([1], [0], 2, [NO_YEAR, 2000])
    with pytest.raises(DataError):
        di_l(g, 0)


def test_batch_singleton_equals_single():
    g = toy()
    for l in (1, 2, 5):
        tab = di_batch(g, [F], l=l)
        assert tab.score(F) == di_l(g, F, l=l)


def test_batch_thread_count_invariant():
    sc = gen_citation_structure(3000, seed=4)
    g = from_edges(sc.src, sc.dst, sc.n_nodes, sc.year)
    a = di_batch(g, np.arange(sc.n_nodes), threads=1)
    b = di_batch(g, np.arange(sc.n_nodes), threads=8)
    for name in ("papers", "n_i", "n_j", "n_k", "di"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()


@pytest.mark.parametrize("seed", range(3))
def test_batch_matches_naive_on_500_nodes(seed):
    rng = np.random.default_rng([500, seed])
    n = 500
    src, dst = rng.integers(0, n, 4000), rng.integers(0, n, 4000)
    year = np.sort(rng.integers(1980, 2010, n)).astype(np.int32)
    g = from_edges(src, dst, n, year)
    tab = di_batch(g, np.arange(n))
    for k, p in enumerate(tab.papers):
        assert (tab.n_i[k], tab.n_j[k], tab.n_k[k]) == di_oracle(src, dst, year, int(p), 5, 5)


def test_planted_scenario_other_l():
    sc = gen_citation_structure(500, l=2, window=3, seed=8)
    g = from_edges(sc.src, sc.dst, sc.n_nodes, sc.year)
    tab = di_batch(g, sc.focal, l=2, w=3)
    planted = sc.planted.set_index("focal").loc[tab.papers]
    np.testing.assert_array_equal(tab.n_j, planted["n_j"].to_numpy())
    np.testing.assert_array_equal(tab.n_i, planted["n_i"].to_numpy())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_bounds_and_monotonicity(seed):
    rng = np.random.default_rng(seed)
    n, src, dst, year = random_citation_graph(rng, n_max=80)
    g = from_edges(src, dst, n, year)
    dated = np.flatnonzero(year >= 0)
    by_l = [di_batch(g, dated, l=l, w=5) for l in (1, 2, 3, 5)]
    for tab in by_l:
        d = tab.di[tab.defined]
        assert np.all((d >= -1) & (d <= 1))
    for lo, hi in zip(by_l[:-1], by_l[1:]):
        assert np.all(hi.n_j <= lo.n_j)
        assert np.all(hi.n_i >= lo.n_i)
        np.testing.assert_array_equal(hi.n_i + hi.n_j, lo.n_i + lo.n_j)
        both = lo.defined & hi.defined
        assert np.all(hi.di[both] >= lo.di[both])
    by_w = [di_batch(g, dated, l=3, w=w) for w in (0, 2, 5, None)]
    for lo, hi in zip(by_w[:-1], by_w[1:]):
        assert np.all(hi.n_i + hi.n_j >= lo.n_i + lo.n_j)
        assert np.all(hi.n_k >= lo.n_k)
