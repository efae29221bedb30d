"""Synthetic corpora and scenarios with planted ground truth.

Every generator is a pure function of its parameters and seed and returns (or
writes) a ledger of the planted values, so tests compare estimates against
the ledger rather than against quantities re-derived from generated data.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .corpus import TOP_FIELDS, write_corpus_tables

YEARS = (1960, 2020)


def _rng(seed, *stream) -> np.random.Generator:
    return np.random.default_rng([int(seed), *[int(s) for s in stream]])


# ---------------------------------------------------------------------------
# team sizes
# ---------------------------------------------------------------------------


def planted_pg(beta: float, gamma: float, g_max: int | None = None, tail: float = 1e-15) -> dict[int, float]:
    """Size-weighted group-size distribution p_g ∝ g^(beta-1) e^(-gamma(g-1)).

    With ``g_max=None`` the support is truncated once the remaining tail
    mass is below ``tail``.
    """
    if beta < 0 or gamma < 0:
        raise ValueError("planted beta and gamma must be non-negative")
    if g_max is None:
        if gamma <= 0:
            raise ValueError("gamma=0 with unbounded group sizes is not normalisable")
        g_max = 1
        # terms are eventually geometric with ratio < 1; stop when negligible
        logw = lambda g: (beta - 1) * math.log(g) - gamma * (g - 1)
        peak = max(1.0, beta / gamma)
        g = int(peak) + 1
        while logw(g) - logw(max(1, int(peak))) > math.log(tail) - 5 and g < 100_000:
            g += 1
        g_max = g
    g = np.arange(1, g_max + 1, dtype=float)
    logw = (beta - 1) * np.log(g) - gamma * (g - 1)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    return {int(k): float(v) for k, v in zip(g, w)}


def paper_size_probs(pg: dict[int, float]) -> tuple[np.ndarray, np.ndarray]:
    """Per-paper size distribution implied by p_g: P(size = g) ∝ p_g / g."""
    g = np.array(sorted(pg), dtype=np.int64)
    w = np.array([pg[k] / k for k in g])
    return g, w / w.sum()


def gen_team_sizes(beta: float, gamma: float, n: int, seed=0, g_max: int | None = None) -> np.ndarray:
    g, prob = paper_size_probs(planted_pg(beta, gamma, g_max))
    return _rng(seed, 11).choice(g, size=n, p=prob)


def expected_mean_size(pg: dict[int, float]) -> float:
    g, prob = paper_size_probs(pg)
    return float((g * prob).sum())


@dataclass
class SynergyCurve:
    """Planted p_g with its (possibly perturbed) empirical synergy curve."""

    g: np.ndarray
    p: np.ndarray
    R_emp: np.ndarray
    planted: dict

    def ledger(self) -> dict:
        return dict(self.planted)


def gen_synergy_curve(beta: float, gamma: float, g_max: int | None = 30, noise: float = 0.0, seed=0) -> SynergyCurve:
    """R_emp for a planted p_g, with multiplicative Gaussian noise of sd ``noise``.

    Without noise R_emp = g z p_g equals the model curve exactly, with alpha
    fixed by the normalisation of p_g.
    """
    pg = planted_pg(beta, gamma, g_max)
    g = np.array(sorted(pg), dtype=float)
    p = np.array([pg[int(k)] for k in g])
    R = g * p / np.dot(p, p)
    if noise > 0:
        R = R * (1.0 + noise * _rng(seed, 13).standard_normal(len(g)))
    w = g ** (beta - 1.0) * np.exp(-gamma * (g - 1.0))
    alpha = 1.0 / float(np.sum(p * w))
    planted = {"kind": "synergy_curve", "alpha": alpha, "beta": beta, "gamma": gamma,
               "g_max": int(g[-1]), "noise_sd": noise, "seed": int(seed)}
    return SynergyCurve(g, p, R, planted)


# ---------------------------------------------------------------------------
# planted DI structure
# ---------------------------------------------------------------------------


@dataclass
class CitationScenario:
    """Graph with planted per-focal (n_i, n_j, n_k)."""

    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    year: np.ndarray
    focal: np.ndarray
    planted: pd.DataFrame  # focal, n_i, n_i_sub, n_j, n_k, di, defined
    l: int
    window: int

    def ledger(self) -> dict:
        return {
            "kind": "citation_structure",
            "l": self.l,
            "window": self.window,
            "focal": self.planted.to_dict(orient="list"),
        }


def gen_citation_structure(n_focal: int = 10_000, l: int = 5, window: int = 5, seed=0, max_count: int = 6) -> CitationScenario:
    """Plant (n_i, n_j, n_k) for ``n_focal`` disjoint focal papers.

    Each focal paper gets private references and citers. Citers of the focal
    paper that cite 1..l-1 references are planted too: they count in n_i under
    the default reclassify rule (``n_i_sub`` in the ledger). Decoys outside
    the window (one year after, one year before) are added and must be
    ignored.
    """
    rng = _rng(seed, 21)
    y0, y1 = YEARS
    src: list[int] = []
    dst: list[int] = []
    year: list[int] = []
    rows = []

    def node(y):
        year.append(int(y))
        return len(year) - 1

    def cite(a, b):
        src.append(a)
        dst.append(b)

    for _ in range(n_focal):
        # all-zero and all-j focal papers appear with fixed probability
        u = rng.random()
        if u < 0.05:
            ni0 = nis = nj = nk = 0
        elif u < 0.10:
            ni0 = nis = nk = 0
            nj = int(rng.integers(1, max_count + 1))
        else:
            ni0 = int(rng.integers(0, max_count + 1))
            nis = int(rng.integers(0, 3)) if l > 1 else 0
            nj = int(rng.integers(0, max_count + 1))
            nk = int(rng.integers(0, max_count + 1))
        t = int(rng.integers(y0 + 6, y1 - window))
        fp = node(t)
        n_refs = max(l, 1) + int(rng.integers(0, 3))
        refs = [node(t - int(rng.integers(1, 6))) for _ in range(n_refs)]
        for r in refs:
            cite(fp, r)

        def in_window():
            return t + int(rng.integers(0, window + 1))

        for _ in range(ni0):
            cite(node(in_window()), fp)
        for _ in range(nis):
            c = node(in_window())
            cite(c, fp)
            for r in rng.choice(refs, size=int(rng.integers(1, l)), replace=False):
                cite(c, int(r))
        for _ in range(nj):
            c = node(in_window())
            cite(c, fp)
            for r in rng.choice(refs, size=int(rng.integers(l, n_refs + 1)), replace=False):
                cite(c, int(r))
        for _ in range(nk):
            c = node(in_window())
            for r in rng.choice(refs, size=int(rng.integers(1, n_refs + 1)), replace=False):
                cite(c, int(r))
        # decoys: late citer, early citer, late k-paper, early k-paper
        late = node(t + window + 1)
        cite(late, fp)
        cite(late, refs[0])
        early = node(t - 1)
        cite(early, fp)
        k_late = node(t + window + 1)
        cite(k_late, refs[-1])
        k_early = node(t - 1)
        cite(k_early, refs[-1])
        n_i = ni0 + nis
        den = n_i + nj + nk
        rows.append(
            {
                "focal": fp,
                "n_i": n_i,
                "n_i_sub": nis,
                "n_j": nj,
                "n_k": nk,
                "di": (n_i - nj) / den if den else float("nan"),
                "defined": den > 0,
            }
        )
    planted = pd.DataFrame(rows)
    return CitationScenario(
        n_nodes=len(year),
        src=np.array(src, dtype=np.int64),
        dst=np.array(dst, dtype=np.int64),
        year=np.array(year, dtype=np.int32),
        focal=planted["focal"].to_numpy(),
        planted=planted,
        l=l,
        window=window,
    )


def scenario_tables(sc: CitationScenario) -> dict[str, dict[str, list]]:
    """Corpus tables for a citation scenario (one solo author per paper)."""
    n = sc.n_nodes
    ids = [f"P{i}" for i in range(n)]
    n_auth = max(1, n // 4)
    return {
        "papers": {
            "paper_id": ids,
            "year": sc.year.tolist(),
            "top_field": ["Physics"] * n,
            "sub_fields": [""] * n,
            "doc_type": ["journal"] * n,
        },
        "authors": {
            "author_id": [f"A{i}" for i in range(n_auth)],
            "gender_label": ["male"] * n_auth,
            "gender_probability": [0.9] * n_auth,
        },
        "authorships": {
            "paper_id": ids,
            "author_id": [f"A{i % n_auth}" for i in range(n)],
            "position_index": [0] * n,
        },
        "citations": {
            "citing_id": [ids[i] for i in sc.src],
            "cited_id": [ids[i] for i in sc.dst],
        },
    }


# ---------------------------------------------------------------------------
# large synthetic corpus for throughput checks
# ---------------------------------------------------------------------------


def write_scale_corpus(out_dir: str | Path, n_papers: int = 1_000_000, n_edges: int = 10_000_000, seed=0) -> dict:
    """Write a corpus of ``n_papers`` papers and about ``n_edges`` citations.

    Citation lags are geometric in years and skewed within the cited year
    so in-degrees are heterogeneous. About 1% of references point outside
    the corpus.
    """
    import pyarrow as pa
    import pyarrow.csv as pacsv

    rng = _rng(seed, 31)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    y0, y1 = YEARS
    years = np.arange(y0, y1 + 1)
    w = 1.0 + 4.0 * (years - y0) / (y1 - y0)
    per_year = np.floor(w / w.sum() * n_papers).astype(np.int64)
    per_year[-1] += n_papers - per_year.sum()
    year = np.repeat(years, per_year)
    start = np.concatenate([[0], np.cumsum(per_year)])
    pid = pa.array(np.char.add("W", np.arange(n_papers).astype("U9")))
    n_auth = n_papers // 2
    sizes = 1 + rng.poisson(2.5, n_papers)
    a_paper = np.repeat(np.arange(n_papers), sizes)
    a_pos = np.arange(len(a_paper)) - np.repeat(np.cumsum(sizes) - sizes, sizes)
    a_id = rng.integers(0, n_auth, len(a_paper))
    aid = pa.array(np.char.add("A", np.arange(n_auth).astype("U9")))
    pacsv.write_csv(
        pa.table(
            {
                "paper_id": pid,
                "year": pa.array(year),
                "top_field": pa.array(np.array(TOP_FIELDS)[rng.integers(0, len(TOP_FIELDS), n_papers)]),
                "sub_fields": pa.array(np.full(n_papers, "")),
                "doc_type": pa.array(np.full(n_papers, "journal")),
            }
        ),
        out_dir / "papers.csv",
    )
    pacsv.write_csv(
        pa.table(
            {
                "author_id": aid,
                "gender_label": pa.array(np.where(rng.random(n_auth) < 0.6, "male", "female")),
                "gender_probability": pa.array(np.round(0.5 + 0.5 * rng.random(n_auth), 3)),
            }
        ),
        out_dir / "authors.csv",
    )
    pacsv.write_csv(
        pa.table({"paper_id": pid.take(pa.array(a_paper)), "author_id": aid.take(pa.array(a_id)), "position_index": pa.array(a_pos)}),
        out_dir / "authorships.csv",
    )
    del a_paper, a_pos, a_id
    citing = rng.integers(0, n_papers, n_edges)
    citing.sort()
    cy = year[citing] - y0
    lag = np.minimum(rng.geometric(0.3, n_edges) - 1, cy)
    ty = cy - lag
    u = rng.random(n_edges) ** 3
    cited = start[ty] + np.floor(u * per_year[ty]).astype(np.int64)
    del cy, lag, ty, u
    ext = rng.random(n_edges) < 0.01
    cited_ids = pid.take(pa.array(cited))
    if ext.any():
        ext_ids = np.char.add("X", rng.integers(0, n_papers // 10, int(ext.sum())).astype("U9"))
        cited_arr = np.asarray(cited_ids.to_numpy(zero_copy_only=False), dtype=object)
        cited_arr[ext] = ext_ids
        cited_ids = pa.array(cited_arr, type=pa.string())
        del cited_arr
    pacsv.write_csv(pa.table({"citing_id": pid.take(pa.array(citing)), "cited_id": cited_ids}), out_dir / "citations.csv")
    ledger = {"kind": "scale", "n_papers": n_papers, "n_edges": n_edges, "seed": int(seed)}
    (out_dir / "ledger.json").write_text(json.dumps(ledger, indent=2, sort_keys=True))
    return ledger


# ---------------------------------------------------------------------------
# inference scenarios
# ---------------------------------------------------------------------------


@dataclass
class Scenario:
    data: pd.DataFrame
    planted: dict

    def ledger(self) -> dict:
        return dict(self.planted)


def gen_mediation(n: int = 5000, a: float = 2.0, b: float = 3.0, c_prime: float = 0.0, noise: float = 1.0, seed=0) -> Scenario:
    """m = a g + e1, y = c' g + b m + e2 with g uniform on 1..10."""
    rng = _rng(seed, 41)
    g = rng.integers(1, 11, n).astype(float)
    m = a * g + rng.normal(0, noise, n)
    y = c_prime * g + b * m + rng.normal(0, noise, n)
    planted = {"kind": "mediation", "a": a, "b": b, "c_prime": c_prime, "indirect": a * b,
               "total": c_prime + a * b, "noise_sd": noise, "n": n, "seed": int(seed)}
    return Scenario(pd.DataFrame({"g": g, "m": m, "y": y}), planted)


def gen_suppression(n: int = 5000, noise: float = 1.0, seed=0) -> Scenario:
    """m = g + e1, y = g - m + e2: positive direct path, negative indirect path."""
    sc = gen_mediation(n, a=1.0, b=-1.0, c_prime=1.0, noise=noise, seed=seed)
    sc.planted["kind"] = "suppression"
    return sc


def gen_moderation(n: int = 10_000, beta=(0.1, 0.02, 0.3, -0.2, 0.5), noise: float = 1.0, seed=0) -> Scenario:
    """y = b0 + b1 g + b2 R + b3 W + b4 R W + e with R varying at fixed g."""
    rng = _rng(seed, 43)
    g = rng.integers(1, 11, n).astype(float)
    r = 1.0 + 0.3 * g + rng.normal(0, 1.0, n)
    w = rng.normal(0, 1.0, n)
    b0, b1, b2, b3, b4 = beta
    y = b0 + b1 * g + b2 * r + b3 * w + b4 * r * w + rng.normal(0, noise, n)
    planted = {"kind": "moderation", "beta": list(beta), "beta4": b4, "noise_sd": noise, "n": n, "seed": int(seed)}
    return Scenario(pd.DataFrame({"y": y, "g": g, "R": r, "W": w}), planted)


def gen_treatment(n: int = 20_000, tau: float = 0.015, confounded: bool = True, noise: float = 0.01, seed=0) -> Scenario:
    """Binary treatment with effect ``tau``.

    With ``confounded=True`` two covariates raise both the treatment odds
    and the outcome, so the naive difference in means is biased upwards.
    """
    rng = _rng(seed, 47)
    x1 = rng.normal(0, 1, n)
    x2 = rng.normal(0, 1, n)
    x3 = rng.normal(0, 1, n)
    if confounded:
        logit = -1.0 + 0.6 * x1 + 0.4 * x2
    else:
        logit = np.full(n, -1.0)
    t = rng.random(n) < 1.0 / (1.0 + np.exp(-logit))
    y = 0.02 * x1 + 0.01 * x2 + 0.005 * x3 + tau * t + rng.normal(0, noise, n)
    planted = {"kind": "treatment", "tau": tau, "confounded": confounded, "confounders": ["x1", "x2"] if confounded else [],
               "noise_sd": noise, "n": n, "seed": int(seed)}
    return Scenario(pd.DataFrame({"id": np.arange(n), "x1": x1, "x2": x2, "x3": x3, "treated": t, "y": y}), planted)


def gen_blobs(n_per: int = 500, k: int = 4, dim: int = 22, separation: float = 12.0, di_shift: float = 0.05, seed=0) -> Scenario:
    """``k`` isotropic unit-variance blobs in ``dim`` dimensions.

    Centres sit ``separation`` apart along distinct axes. Each blob also gets
    an outcome column whose mean is shifted by ``di_shift`` per blob.
    """
    rng = _rng(seed, 53)
    centres = np.zeros((k, dim))
    for i in range(k):
        centres[i, i % dim] = separation
    label = np.repeat(np.arange(k), n_per)
    X = centres[label] + rng.normal(0, 1, (k * n_per, dim))
    di = label * di_shift + rng.normal(0, 0.05, len(label))
    cols = {f"f{j}": X[:, j] for j in range(dim)}
    df = pd.DataFrame({**cols, "label": label, "di": di})
    planted = {"kind": "blobs", "k": k, "dim": dim, "n_per": n_per, "separation": separation,
               "di_shift": di_shift, "seed": int(seed)}
    return Scenario(df, planted)


# ---------------------------------------------------------------------------
# career-model corpus
# ---------------------------------------------------------------------------


@dataclass
class FieldPlant:
    name: str
    beta: float
    gamma: float
    beta_drift: float = 0.0  # added to beta per decade after 1960


@dataclass
class SynthSpec:
    seed: int = 0
    n_papers: int = 30_000
    years: tuple[int, int] = (1960, 2020)
    g_max: int = 25
    fields: list[FieldPlant] = field(
        default_factory=lambda: [
            FieldPlant("Geology", 2.54, 0.58, 0.02),
            FieldPlant("Philosophy", 0.0, 0.77, 0.0),
            FieldPlant("Physics", 1.6, 0.25, 0.03),
            FieldPlant("Biology", 1.5, 0.2, 0.05),
        ]
    )
    papers_per_author: float = 4.0
    elite_fraction: float = 0.1
    elite_multiplier: float = 10.0
    refs_mean: float = 8.0
    ref_lookback: int = 10
    p_unknown_gender: float = 0.03
    p_male: float = 0.6
    n_probes: int = 300

    def as_dict(self) -> dict:
        d = asdict(self)
        d["years"] = list(self.years)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        d = dict(d)
        if "fields" in d:
            d["fields"] = [f if isinstance(f, FieldPlant) else FieldPlant(**f) for f in d["fields"]]
        if "years" in d:
            d["years"] = tuple(d["years"])
        return cls(**d)


def decade_of(year) -> np.ndarray:
    return (np.asarray(year) // 10) * 10


def _slice_plant(fp: FieldPlant, decade: int, y0: int) -> tuple[float, float]:
    return fp.beta + fp.beta_drift * (decade - decade_of(y0)) / 10, fp.gamma


@dataclass
class SynthCorpus:
    tables: dict
    ledger: dict


def gen_career_corpus(spec: SynthSpec | None = None) -> SynthCorpus:
    """Corpus with planted team-size laws, author careers and citations.

    Authors arrive in a field over time and are drawn onto teams with
    probability proportional to their activity weight (elite authors get
    ``elite_multiplier`` times the weight). Team sizes per (field, decade)
    follow the planted synergy law. Each paper cites earlier papers of its
    field within ``ref_lookback`` years, favouring papers with elite authors.
    """
    spec = spec or SynthSpec()
    rng = _rng(spec.seed, 61)
    y0, y1 = spec.years
    years = np.arange(y0, y1 + 1)
    n_f = len(spec.fields)
    growth = 1.0 + 3.0 * (years - y0) / max(1, y1 - y0)
    per_year = np.floor(growth / growth.sum() * spec.n_papers).astype(np.int64)
    per_year[-1] += spec.n_papers - per_year.sum()

    # planted per-slice size laws
    slices = {}
    for fi, fp in enumerate(spec.fields):
        for dec in np.unique(decade_of(years)):
            b, c = _slice_plant(fp, int(dec), y0)
            pg = planted_pg(b, c, spec.g_max)
            slices[(fi, int(dec))] = (b, c, pg)
    mean_g = np.mean([expected_mean_size(v[2]) for v in slices.values()])

    # authors: arrival year, field, weight
    n_auth = int(np.ceil(spec.n_papers * mean_g / spec.papers_per_author))
    a_field = rng.integers(0, n_f, n_auth)
    a_arrive = np.where(rng.random(n_auth) < 0.1, y0, y0 + np.floor((y1 - y0 - 2) * rng.random(n_auth) ** 0.8)).astype(np.int64)
    elite = rng.random(n_auth) < spec.elite_fraction
    weight = np.where(elite, spec.elite_multiplier, 1.0)
    u = rng.random(n_auth)
    gender = np.where(u < spec.p_unknown_gender, "unknown", np.where(rng.random(n_auth) < spec.p_male, "male", "female"))
    gprob = np.where(gender == "unknown", np.nan, np.round(0.6 + 0.4 * rng.random(n_auth), 3))

    p_year, p_field, p_size = [], [], []
    byline: list[np.ndarray] = []
    for t, n_t in zip(years, per_year):
        f_t = np.sort(rng.integers(0, n_f, n_t))
        for fi in range(n_f):
            m = int((f_t == fi).sum())
            if m == 0:
                continue
            _, _, pg = slices[(fi, int(decade_of(t)))]
            gs, prob = paper_size_probs(pg)
            sizes = rng.choice(gs, size=m, p=prob)
            active = np.flatnonzero((a_field == fi) & (a_arrive <= t))
            if len(active) < sizes.max():
                sizes = np.minimum(sizes, len(active))
            # weighted sampling without replacement via Gumbel top-k
            keys = np.log(weight[active])[None, :] + rng.gumbel(size=(m, len(active)))
            top = np.argsort(-keys, axis=1, kind="stable")[:, : sizes.max()]
            for r in range(m):
                byline.append(active[top[r, : sizes[r]]])
            p_year.extend([int(t)] * m)
            p_field.extend([fi] * m)
            p_size.extend(sizes.tolist())
    p_year = np.array(p_year)
    p_field = np.array(p_field)
    n = len(p_year)
    has_elite = np.array([elite[b].any() for b in byline])

    # citations to earlier papers of the same field in the look-back window
    src_l, dst_l = [], []
    idx_by_field = [np.flatnonzero(p_field == fi) for fi in range(n_f)]
    cite_w = np.where(has_elite, 3.0, 1.0)
    for fi in range(n_f):
        idx = idx_by_field[fi]
        yrs = p_year[idx]
        for t in np.unique(yrs):
            citing = idx[yrs == t]
            lo = np.searchsorted(yrs, t - spec.ref_lookback)
            hi = np.searchsorted(yrs, t)
            if hi <= lo:
                continue
            pool = idx[lo:hi]
            w = cite_w[pool] / cite_w[pool].sum()
            k = rng.poisson(spec.refs_mean, len(citing))
            tot = int(k.sum())
            if tot == 0:
                continue
            picks = rng.choice(pool, size=tot, p=w)
            src_l.append(np.repeat(citing, k))
            dst_l.append(picks)
    src = np.concatenate(src_l) if src_l else np.zeros(0, np.int64)
    dst = np.concatenate(dst_l) if dst_l else np.zeros(0, np.int64)
    pair = np.unique(src.astype(np.int64) * n + dst)
    src, dst = pair // n, pair % n

    # atypicality: noisy, mildly higher for large teams
    aty = np.round(rng.normal(0, 1, n) + 0.05 * np.array(p_size), 4)

    pid = [f"S{i:07d}" for i in range(n)]
    aid = [f"U{i:07d}" for i in range(n_auth)]
    names = [fp.name for fp in spec.fields]
    au_paper = np.repeat(np.arange(n), [len(b) for b in byline])
    au_pos = np.concatenate([np.arange(len(b)) for b in byline])
    au_id = np.concatenate(byline)
    tables = {
        "papers": {
            "paper_id": pid,
            "year": p_year.tolist(),
            "top_field": [names[f] for f in p_field],
            "sub_fields": [""] * n,
            "doc_type": ["journal"] * n,
            "atypicality_z": aty.tolist(),
        },
        "authors": {
            "author_id": aid,
            "gender_label": gender.tolist(),
            "gender_probability": [None if np.isnan(x) else float(x) for x in gprob],
        },
        "authorships": {
            "paper_id": [pid[i] for i in au_paper],
            "author_id": [aid[i] for i in au_id],
            "position_index": au_pos.tolist(),
        },
        "citations": {
            "citing_id": [pid[i] for i in src],
            "cited_id": [pid[i] for i in dst],
        },
    }

    # ledger probes: prior publication / citation counts tracked from the
    # generator's own records
    probes = []
    a_papers = [[] for _ in range(n_auth)]
    for i, b in enumerate(byline):
        for a in b:
            a_papers[a].append(i)
    cit_years = [[] for _ in range(n)]
    for s, d in zip(src, dst):
        cit_years[d].append(p_year[s])
    for a in rng.choice(n_auth, size=min(spec.n_probes, n_auth), replace=False):
        if not a_papers[a]:
            continue
        t = int(rng.integers(y0, y1 + 1))
        prior = [i for i in a_papers[a] if p_year[i] < t]
        cites = sum(1 for i in prior for yc in cit_years[i] if yc < t)
        probes.append({"author_id": aid[a], "year": t, "prior_pubs": len(prior), "prior_citations": cites})

    ledger = {
        "kind": "career_corpus",
        "spec": spec.as_dict(),
        "n_papers": n,
        "n_authors": n_auth,
        "n_citations": int(len(src)),
        "elite_authors": [aid[i] for i in np.flatnonzero(elite)],
        "slices": [
            {
                "field": names[fi],
                "decade": dec,
                "beta": b,
                "gamma": c,
                "expected_mean_size": expected_mean_size(pg),
                "p_g": {str(k): v for k, v in pg.items()},
            }
            for (fi, dec), (b, c, pg) in sorted(slices.items())
        ],
        "probes": probes,
    }
    return SynthCorpus(tables, ledger)


def write_synth(out_dir: str | Path, spec: SynthSpec | None = None) -> dict:
    sc = gen_career_corpus(spec)
    out_dir = Path(out_dir)
    write_corpus_tables(sc.tables, out_dir)
    (out_dir / "ledger.json").write_text(json.dumps(sc.ledger, indent=2, sort_keys=True))
    return sc.ledger
