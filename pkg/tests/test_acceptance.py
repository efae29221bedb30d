"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v``; the verdicts are repeated in the
terminal summary under "acceptance criteria".
"""

import filecmp
import json
import os
import shutil
import subprocess
import sys
import textwrap
import time
from pathlib import Path

import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from oracles import alpha_loop, di_oracle, random_citation_graph
from synergylab.disruption import di_batch
from synergylab.graph import from_edges
from synergylab.inference import kruskal_wallis, mediate, moderate, psm_att
from synergylab.modes import cluster, select_k
from synergylab.synergy import (
    EmpiricalSynergy,
    alpha_of,
    empirical_synergy,
    equilibrium_scale,
    fit_synergy,
    model_R,
)
from synergylab.synthlab import (
    gen_blobs,
    gen_citation_structure,
    gen_mediation,
    gen_moderation,
    gen_suppression,
    gen_synergy_curve,
    gen_treatment,
)


def _random_p(rng):
    n = int(rng.integers(1, 40))
    g = np.sort(rng.choice(np.arange(1, 200), size=n, replace=False)).astype(float)
    w = rng.random(n) ** 3 + 1e-12
    return g, w / w.sum()


@pytest.mark.criterion(1, "DI equals the set-algebra oracle on 50 random graphs")
def test_di_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    t_batch = 0.0
    mismatches = 0
    n_checked = 0
    paths = set()
    for seed in range(50):
        rng = np.random.default_rng([2024, seed])
        n, src, dst, year = random_citation_graph(rng)
        g = from_edges(src, dst, n, year)
        paths.add(g.year_sorted)
        dated = np.flatnonzero(year >= 0)
        for l in (1, 3, 5):
            for w in (3, 5, None):
                tb = time.perf_counter()
                tab = di_batch(g, dated, l=l, w=w)
                t_batch += time.perf_counter() - tb
                for k, p in enumerate(tab.papers):
                    n_i, n_j, n_k = di_oracle(src, dst, year, int(p), l, w)
                    got = (int(tab.n_i[k]), int(tab.n_j[k]), int(tab.n_k[k]))
                    den = n_i + n_j + n_k
                    want_di = (n_i - n_j) / den if den else None
                    got_di = float(tab.di[k]) if tab.defined[k] else None
                    mismatches += got != (n_i, n_j, n_k) or got_di != want_di
                    n_checked += 1
    elapsed = time.perf_counter() - t0
    checks = {
        "exact match": mismatches == 0,
        "di_batch runtime < 10 s": t_batch < 10.0,
        "bisect and scan paths both exercised": paths == {True, False},
    }
    ok = verdict(checks, f"{n_checked} (paper, l, w) cases, {mismatches} mismatches, di_batch {t_batch:.2f} s, "
                         f"with oracle {elapsed:.1f} s")
    assert ok


@pytest.mark.criterion(2, "planted DI recovered bit-exactly for 10^4 papers")
def test_di_planted_recovery(verdict):
    sc = gen_citation_structure(10_000, l=5, window=5, seed=11)
    g = from_edges(sc.src, sc.dst, sc.n_nodes, sc.year)
    tab = di_batch(g, sc.focal, l=sc.l, w=sc.window)
    led = sc.ledger()["focal"]
    order = np.argsort(np.asarray(led["focal"]))
    planted = {k: np.asarray(led[k])[order] for k in ("focal", "n_i", "n_j", "n_k", "di", "defined")}
    same_nodes = np.array_equal(tab.papers, planted["focal"])
    counts = all(np.array_equal(getattr(tab, k), planted[k]) for k in ("n_i", "n_j", "n_k"))
    defined = np.array_equal(tab.defined, planted["defined"].astype(bool))
    d = tab.defined
    bits = np.array_equal(tab.di[d].view(np.uint64), planted["di"][d].astype(np.float64).view(np.uint64))
    checks = {"same focal set": same_nodes, "counts equal": counts, "defined flags equal": defined,
              "DI bit-identical": bits}
    ok = verdict(checks, f"{len(tab)} focal papers, {int((~d).sum())} undefined")
    assert ok


@pytest.mark.criterion(3, "equilibrium identity on 100 random p_g")
def test_equilibrium_identity(verdict):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        g, p = _random_p(rng)
        emp = empirical_synergy((g, p))
        z = equilibrium_scale((g, p))
        worst = max(worst, abs(float(np.sum(p * (1.0 - z * p)))), abs(emp.residual))
    ok = verdict({"|residual| <= 1e-10": worst <= 1e-10}, f"max |residual| {worst:.2e}")
    assert ok


def _recovery_runs():
    """Fits shared by criteria 4 and 5: 50 noiseless plants and 100 noisy runs."""
    rng = np.random.default_rng(5)
    plants = [(float(rng.uniform(0, 2)), float(rng.uniform(0.01, 0.5))) for _ in range(50)]
    t0 = time.perf_counter()
    noiseless = []
    for b, c in plants:
        cv = gen_synergy_curve(b, c, g_max=30)
        noiseless.append((cv, fit_synergy(EmpiricalSynergy.observed(cv.g, cv.p, cv.R_emp))))
    noisy = []
    for s in range(100):
        cv = gen_synergy_curve(1.5, 0.2, g_max=30, noise=0.01, seed=s)
        noisy.append((cv, fit_synergy(EmpiricalSynergy.observed(cv.g, cv.p, cv.R_emp))))
    return noiseless, noisy, time.perf_counter() - t0


@pytest.fixture(scope="module")
def recovery_runs():
    return _recovery_runs()


@pytest.mark.criterion(4, "alpha constraint holds for random p and every fit")
def test_alpha_constraint(verdict, recovery_runs):
    rng = np.random.default_rng(4)
    worst_unit = 0.0
    for _ in range(200):
        g, p = _random_p(rng)
        worst_unit = max(worst_unit, abs(alpha_of(1.0, 0.0, (g, p)) - 1.0))
    noiseless, noisy, _ = recovery_runs
    worst_rel = 0.0
    for cv, fit in noiseless + noisy:
        ref = alpha_loop(fit.beta, fit.gamma, cv.g, cv.p)
        worst_rel = max(worst_rel, abs(fit.alpha - ref) / abs(ref))
    checks = {"alpha(1, 0) = 1 within 1e-12": worst_unit <= 1e-12,
              "fit alpha re-evaluated within 1e-10 rel": worst_rel <= 1e-10}
    ok = verdict(checks, f"max |alpha(1,0)-1| {worst_unit:.1e}; max rel diff {worst_rel:.1e} over "
                         f"{len(noiseless) + len(noisy)} fits")
    assert ok


@pytest.mark.criterion(5, "fit recovery, noiseless and with 1% noise")
def test_fit_recovery(verdict, recovery_runs):
    noiseless, noisy, elapsed = recovery_runs
    err = max(max(abs(f.beta - cv.planted["beta"]), abs(f.gamma - cv.planted["gamma"])) for cv, f in noiseless)
    r2 = min(f.r_squared for _, f in noiseless)
    within = sum(
        abs(f.beta / cv.planted["beta"] - 1) <= 0.05 and abs(f.gamma / cv.planted["gamma"] - 1) <= 0.05
        for cv, f in noisy
    )
    checks = {
        "noiseless |error| <= 1e-3": err <= 1e-3,
        "noiseless R^2 >= 0.9999": r2 >= 0.9999,
        "noisy within 5% in >= 90/100": within >= 90,
        "runtime < 60 s": elapsed < 60.0,
    }
    ok = verdict(checks, f"max abs error {err:.1e}, min R^2 {r2:.6f}, noisy {within}/100, {elapsed:.1f} s")
    assert ok


@pytest.mark.criterion(6, "interior optimum at beta/gamma; Geology-style plant g* = 4.379")
def test_interior_optimum(verdict, recovery_runs):
    noiseless, noisy, _ = recovery_runs
    cv = gen_synergy_curve(2.54, 0.58, g_max=30)
    geo = fit_synergy(EmpiricalSynergy.observed(cv.g, cv.p, cv.R_emp))
    step = 1e-3
    worst = 0.0
    n_interior = 0
    for _, f in noiseless + noisy + [(cv, geo)]:
        if f.gamma <= 0 or f.beta / f.gamma <= 1:
            assert f.optimum.kind != "interior"
            continue
        n_interior += 1
        g_max = max(30.0, 2 * f.beta / f.gamma)
        grid = np.arange(1.0, g_max + step / 2, step)
        g_num = grid[np.argmax(model_R(grid, f.alpha, f.beta, f.gamma))]
        worst = max(worst, abs(g_num - f.g_star))
    checks = {
        "grid argmax within one step": worst <= step,
        "Geology g* = 4.379 +- 0.001": geo.g_star is not None and abs(geo.g_star - 4.379) <= 1e-3,
        "interior classification": geo.optimum.kind == "interior",
    }
    ok = verdict(checks, f"{n_interior} interior fits, max |argmax - beta/gamma| {worst:.1e}, "
                         f"Geology g* {geo.g_star:.4f}")
    assert ok


@pytest.mark.criterion(7, "mediation identity, planted recovery and suppression")
def test_mediation(verdict):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(20, 500))
        g = rng.lognormal(size=n)
        m = rng.standard_t(3, size=n) + rng.random() * g
        y = rng.standard_cauchy(size=n) * 0.1 + rng.normal(size=n) * m
        r = mediate(g, m, y, n_boot=0)
        worst = max(worst, abs((r.total_effect - r.direct_effect) - r.path_a * r.path_b))
    sc = gen_mediation(seed=1)
    led = sc.ledger()
    r = mediate(sc.data.g, sc.data.m, sc.data.y, n_boot=1000, seed=1)
    rel = lambda est, true: abs(est / true - 1)
    sup = gen_suppression(seed=2)
    rs = mediate(sup.data.g, sup.data.m, sup.data.y, n_boot=200, seed=2)
    checks = {
        "c - c' = a b within 1e-8": worst <= 1e-8,
        "a within 5%": rel(r.path_a, led["a"]) <= 0.05,
        "b within 5%": rel(r.path_b, led["b"]) <= 0.05,
        "indirect within 5%": rel(r.indirect_effect, led["a"] * led["b"]) <= 0.05,
        "proportion mediated within 5% of 1": r.proportion_mediated is not None
        and abs(r.proportion_mediated - 1.0) <= 0.05,
        "suppression flagged": rs.suppression and not r.suppression,
    }
    ok = verdict(checks, f"identity err {worst:.1e}; a {r.path_a:.3f} b {r.path_b:.3f} "
                         f"ab {r.indirect_effect:.3f} prop {r.proportion_mediated:.3f}")
    assert ok


@pytest.mark.criterion(8, "moderation CI coverage of beta_4 in 93-97% over 500 runs")
def test_moderation_coverage(verdict):
    rates = {}
    for b4 in (0.0, 0.5):
        hits = 0
        for i in range(500):
            seed = int(b4 * 10) * 100_000 + i
            sc = gen_moderation(beta=(0.1, 0.02, 0.3, -0.2, b4), seed=seed)
            d = sc.data
            est = moderate(d.y, d.g, d.R, d.W).beta4
            hits += est["ci_low"] <= sc.ledger()["beta4"] <= est["ci_high"]
        rates[b4] = hits / 500
    checks = {f"coverage beta4={b}": 0.93 <= c <= 0.97 for b, c in rates.items()}
    ok = verdict(checks, ", ".join(f"beta4={b}: {c:.1%}" for b, c in rates.items()))
    assert ok


@pytest.mark.criterion(9, "PSM recovers tau = 0.015 within 10% with balance")
def test_psm_recovery(verdict):
    sc = gen_treatment(n=20_000, tau=0.015, confounded=True, seed=9)
    covs = [c for c in sc.data.columns if c.startswith("x")]
    res = psm_att(sc.data, "treated", covs, "y", id_col="id")
    tau = sc.ledger()["tau"]
    smd_before = res.balance["smd_before"].abs().max()
    smd_after = res.balance["smd_after"].abs().max()
    checks = {
        "ATT within 10%": abs(res.att / tau - 1) <= 0.10,
        "post-match |SMD| < 0.1": smd_after < 0.1,
        "confounded before matching": smd_before >= 0.1,
    }
    ok = verdict(checks, f"ATT {res.att:.5f} vs {tau}, max |SMD| {smd_before:.3f} -> {smd_after:.3f}, "
                         f"{res.n_matched}/{res.n_treated} matched")
    assert ok


@pytest.mark.criterion(10, "clustering selects 4 planted blobs; Kruskal-Wallis checks")
def test_clustering(verdict):
    sc = gen_blobs(n_per=500, k=4, dim=22, seed=10)
    d = sc.data
    X = d[[f"f{i}" for i in range(22)]].to_numpy()
    sel = select_k(X, range(2, 11), seed=10)
    model = cluster(X, sel.k, seed=10)
    ari = adjusted_rand_score(d["label"], model.labels)
    h, p = kruskal_wallis([d["di"][model.labels == j].to_numpy() for j in range(model.k)])
    rng = np.random.default_rng(10)
    same = rng.normal(size=40)
    h0, _ = kruskal_wallis([same, same.copy(), same.copy()])
    checks = {
        "select_k = 4": sel.k == 4,
        "ARI >= 0.99": ari >= 0.99,
        "KW p < 0.001 on shifted DI": p < 1e-3,
        "identical groups H = 0": h0 == 0.0,
    }
    ok = verdict(checks, f"k {sel.k}, ARI {ari:.4f}, KW H {h:.1f} p {p:.1e}, identical H {h0}")
    assert ok


_PERF_SCRIPT = textwrap.dedent(
    """
    import hashlib, json, resource, sys, time
    import numba
    import numpy as np
    from synergylab.corpus import load_corpus
    from synergylab.graph import build_graph
    from synergylab.disruption import di_batch

    def digest(tab):
        h = hashlib.sha256()
        for a in (tab.papers, tab.n_i, tab.n_j, tab.n_k, tab.di):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()

    t0 = time.perf_counter()
    c = load_corpus(sys.argv[1])
    t1 = time.perf_counter()
    g = build_graph(c)
    t2 = time.perf_counter()
    tab = di_batch(g, c.view(), l=5, w=5)
    t3 = time.perf_counter()
    rss = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024
    multi = digest(tab)
    threads = numba.get_num_threads()
    del tab
    single = digest(di_batch(g, c.view(), l=5, w=5, threads=1))
    print(json.dumps({
        "papers": c.n_papers, "edges": g.n_edges, "ingest": t1 - t0, "graph": t2 - t1, "di": t3 - t2,
        "total": t3 - t0, "peak_rss": rss, "threads": threads, "multi": multi, "single": single,
    }))
    """
)


@pytest.mark.criterion(11, "10^6 papers / 10^7 edges: ingest + graph + DI_5 < 120 s, < 8 GB, thread-invariant")
def test_performance(verdict, tmp_path):
    corpus = tmp_path / "scale"
    gen = subprocess.run(
        [sys.executable, "-c",
         f"from synergylab.synthlab import write_scale_corpus; write_scale_corpus({str(corpus)!r}, seed=1)"],
        capture_output=True, text=True, timeout=600,
    )
    assert gen.returncode == 0, gen.stderr
    env = dict(os.environ, NUMBA_NUM_THREADS=str(max(4, os.cpu_count() or 1)))
    run = subprocess.run([sys.executable, "-c", _PERF_SCRIPT, str(corpus)], capture_output=True, text=True,
                         timeout=900, env=env)
    assert run.returncode == 0, run.stderr
    r = json.loads(run.stdout.strip().splitlines()[-1])
    checks = {
        "10^6 papers": r["papers"] >= 1_000_000,
        "~10^7 edges": r["edges"] >= 9_500_000,
        "< 120 s": r["total"] < 120.0,
        "< 8 GB peak RSS": r["peak_rss"] < 8 * 2**30,
        "thread-count invariant": r["multi"] == r["single"],
    }
    ok = verdict(checks, f"ingest {r['ingest']:.1f} s, graph {r['graph']:.1f} s, DI {r['di']:.1f} s, total "
                         f"{r['total']:.1f} s, peak {r['peak_rss'] / 2**30:.2f} GiB, {r['threads']} vs 1 "
                         f"threads on {os.cpu_count()} cores")
    assert ok


def _tree_diff(a: Path, b: Path) -> list[str]:
    cmp = filecmp.dircmp(a, b)
    diffs = [str(Path(a.name) / x) for x in cmp.left_only + cmp.right_only + cmp.funny_files]
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    diffs += mismatch + errors
    for sub in cmp.common_dirs:
        diffs += _tree_diff(a / sub, b / sub)
    return diffs


@pytest.mark.criterion(12, "end-to-end pipeline twice gives byte-identical artifacts")
def test_end_to_end_determinism(verdict, tmp_path):
    (tmp_path / "run.toml").write_text(textwrap.dedent(
        """
        [input]
        dir = "corpus"
        [output]
        dir = "out"
        [synth]
        n_papers = 8000
        [fit]
        min_count = 20
        [inference]
        n_boot = 200
        [run]
        seed = 12
        """
    ))
    cli = [sys.executable, "-m", "synergylab.cli"]
    for cmd in ("synth", "all", "all"):
        if cmd == "all" and (tmp_path / "out").exists():
            shutil.move(tmp_path / "out", tmp_path / "first")
        r = subprocess.run(cli + [cmd, "--config", "run.toml"], cwd=tmp_path, capture_output=True, text=True,
                           timeout=900)
        assert r.returncode == 0, r.stderr
    first, second = tmp_path / "first", tmp_path / "out"
    diffs = _tree_diff(first, second)
    n_files = sum(1 for p in second.rglob("*") if p.is_file())
    checks = {"identical trees": not diffs, "artifacts written": n_files >= 20}
    ok = verdict(checks, f"{n_files} files compared" + (f"; differing: {diffs[:5]}" if diffs else ""))
    assert ok
