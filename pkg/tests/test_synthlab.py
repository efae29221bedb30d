import filecmp
import json

import numpy as np
import pandas as pd
import pytest

from synergylab.synthlab import (
    SynthSpec,
    expected_mean_size,
    gen_career_corpus,
    gen_citation_structure,
    gen_mediation,
    gen_team_sizes,
    paper_size_probs,
    planted_pg,
    write_synth,
)


def test_write_synth_is_byte_reproducible(tmp_path):
    spec = SynthSpec(seed=5, n_papers=1500)
    a = write_synth(tmp_path / "a", spec)
    b = write_synth(tmp_path / "b", spec)
    assert a == b
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "ledger.json" in names
    _, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", names, shallow=False)
    assert mismatch == [] and errors == []
    other = write_synth(tmp_path / "c", SynthSpec(seed=6, n_papers=1500))
    assert other["probes"] != a["probes"]


def test_ledger_contents():
    spec = SynthSpec(seed=1, n_papers=2000)
    led = gen_career_corpus(spec).ledger
    assert led["spec"] == json.loads(json.dumps(spec.as_dict()))
    assert SynthSpec.from_dict(led["spec"]) == spec
    fields = {s["field"] for s in led["slices"]}
    assert fields <= {f.name for f in spec.fields}
    for s in led["slices"]:
        assert sum(s["p_g"].values()) == pytest.approx(1.0, abs=1e-12)
        plant = next(f for f in spec.fields if f.name == s["field"])
        assert s["gamma"] == plant.gamma
        assert s["beta"] == pytest.approx(plant.beta + plant.beta_drift * (s["decade"] - 1960) / 10)


def test_team_size_sampler_matches_planted_law():
    pg = planted_pg(1.5, 0.2, g_max=30)
    g, prob = paper_size_probs(pg)
    sizes = gen_team_sizes(1.5, 0.2, 200_000, seed=3, g_max=30)
    emp = np.bincount(sizes, minlength=31)[1:] / len(sizes)
    assert 0.5 * np.abs(emp - prob).sum() < 0.01
    assert sizes.mean() == pytest.approx(expected_mean_size(pg), rel=0.01)
    np.testing.assert_array_equal(sizes, gen_team_sizes(1.5, 0.2, 200_000, seed=3, g_max=30))


def test_realised_team_sizes_follow_slice_plants():
    led = gen_career_corpus(SynthSpec(seed=2, n_papers=20_000))
    T = led.tables
    papers = pd.DataFrame(T["papers"])
    size = pd.DataFrame(T["authorships"]).groupby("paper_id").size().rename("g")
    papers = papers.join(size, on="paper_id")
    papers["decade"] = papers["year"] // 10 * 10
    mean_g = papers.groupby(["top_field", "decade"])["g"].agg(["mean", "std", "size"])
    checked = 0
    for s in led.ledger["slices"]:
        key = (s["field"], s["decade"])
        if key in mean_g.index and mean_g.loc[key, "size"] >= 300:
            row = mean_g.loc[key]
            assert abs(row["mean"] - s["expected_mean_size"]) < 4 * row["std"] / np.sqrt(row["size"])
            checked += 1
    assert checked >= 20


def test_mediation_generator_plants():
    sc = gen_mediation(n=100, a=1.5, b=-2.0, c_prime=0.5, seed=4)
    assert sc.ledger()["indirect"] == -3.0 and sc.ledger()["total"] == -2.5
    assert list(sc.data.columns) == ["g", "m", "y"]
    pd.testing.assert_frame_equal(sc.data, gen_mediation(n=100, a=1.5, b=-2.0, c_prime=0.5, seed=4).data)


def test_citation_scenario_ledger_is_consistent():
    sc = gen_citation_structure(200, seed=3)
    p = sc.planted
    den = p.n_i + p.n_j + p.n_k
    assert (p["defined"] == (den > 0)).all()
    np.testing.assert_allclose(p.loc[p.defined, "di"], ((p.n_i - p.n_j) / den)[p.defined])
    assert sc.ledger()["l"] == 5 and len(sc.ledger()["focal"]["focal"]) == 200
