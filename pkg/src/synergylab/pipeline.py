"""Stage orchestration behind the CLI.

Each stage is a lazily computed property of :class:`Pipeline`, so a
subcommand computes exactly the upstream stages it needs. Every artifact
is a pure function of the config and the input files.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from functools import cached_property
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats

from . import __version__
from .config import RunConfig
from .corpus import NO_YEAR, TOP_FIELDS, CorpusView, Schema, filter_complete, load_corpus
from .disruption import di_batch
from .errors import ConfigError, DataError, NumericalError, SynergyLabError
from .features import HETEROGENEITY, AuthorHistory, team_features
from .graph import NO_YEAR as G_NO_YEAR, build_graph
from .hypergraph import GroupSizeDistribution, build_hypergraph
from .inference import mediate, moderate, psm_att
from .modes import assemble_features, cluster, load_roster, mode_outcomes, pca_synergy, select_k, zscore
from .synergy import DEFAULT_STARTS, empirical_synergy, fit_synergy, model_R

log = logging.getLogger(__name__)

TABLES = ("papers", "authors", "authorships", "citations")
TREATMENTS = ("has_key_author", "has_high_di", "has_high_citation", "has_high_productivity")
PSM_COVARIATES = (
    "year",
    "g",
    "R_at_g",
    "var_age",
    "var_di",
    "gender_proportion",
    "var_disciplinary",
    "var_productivity",
)
MODERATORS = HETEROGENEITY
ALL = "all"


def write_csv(df: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n")
    return path


def write_json(obj, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(f"not serialisable: {type(o).__name__}")


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def configure_threads(cfg: RunConfig) -> int | None:
    """Thread count from the config, else SYNERGYLAB_THREADS; None keeps the default."""
    n = cfg.run.threads or int(os.environ.get("SYNERGYLAB_THREADS", "0") or 0)
    if n <= 0:
        return None
    import numba

    n = min(n, numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(n)
    return n


class Pipeline:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = cfg.resolve(cfg.output.dir)
        self.threads = configure_threads(cfg)

    # ------------------------------------------------------------------ io
    def input_paths(self) -> dict[str, Path]:
        inp = self.cfg.input
        paths = {}
        for t in TABLES:
            explicit = getattr(inp, t)
            if explicit:
                paths[t] = self.cfg.resolve(explicit)
            elif inp.dir:
                d = self.cfg.resolve(inp.dir)
                tsv = d / f"{t}.tsv"
                paths[t] = tsv if tsv.exists() and not (d / f"{t}.csv").exists() else d / f"{t}.csv"
            else:
                raise ConfigError(f"no input path for table {t!r} (set input.dir or input.{t})")
        for t, p in paths.items():
            if not p.exists():
                raise DataError(f"input file for {t} not found: {p}")
        return paths

    def write_run_record(self, command: str) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        write_json(self.cfg.to_dict(), self.out / "run_config.json")
        inputs = {t: {"path": p.name, "sha256": sha256_file(p)} for t, p in sorted(self.input_paths().items())}
        if self.cfg.input.schema:
            sp = self.cfg.resolve(self.cfg.input.schema)
            inputs["schema"] = {"path": sp.name, "sha256": sha256_file(sp)}
        write_json({"tool": "synergylab", "version": __version__, "command": command, "inputs": inputs},
                   self.out / "run_manifest.json")

    # -------------------------------------------------------------- corpus
    @cached_property
    def corpus(self):
        schema = Schema.load(self.cfg.resolve(self.cfg.input.schema)) if self.cfg.input.schema else None
        c = load_corpus(self.input_paths(), schema, (self.cfg.corpus.year_min, self.cfg.corpus.year_max))
        log.info("ingest: %r", c)
        return c

    @cached_property
    def graph(self):
        return build_graph(self.corpus)

    @cached_property
    def di(self):
        c = self.corpus
        dated = np.flatnonzero(c.year != NO_YEAR)
        w = self.cfg.di.window
        return di_batch(self.graph, dated, self.cfg.di.l, None if w < 0 else w, self.cfg.di.subthreshold, self.threads)

    @cached_property
    def view(self) -> CorpusView:
        c = self.corpus
        v = filter_complete(c, self.cfg.corpus.required, self.di, self.cfg.corpus.gender_threshold)
        if "top_field" not in self.cfg.corpus.required:
            v = CorpusView(c, v.index[v.top_field >= 0])
        if "year" not in self.cfg.corpus.required:
            v = CorpusView(c, v.index[v.year != NO_YEAR])
        if self.cfg.slicing.disciplines:
            from .corpus import field_code

            codes = [field_code(f) for f in self.cfg.slicing.disciplines]
            v = CorpusView(c, v.index[np.isin(v.top_field, codes)])
        if len(v) == 0:
            raise DataError("no papers left after completeness filtering")
        return v

    def period_of(self, year: np.ndarray) -> np.ndarray:
        s, w = self.cfg.slicing.period_start, self.cfg.slicing.period_width
        return s + ((np.asarray(year) - s) // w) * w

    # ---------------------------------------------------------- hypergraph
    @cached_property
    def hyper(self):
        return build_hypergraph(self.view)

    @cached_property
    def paper_frame(self) -> pd.DataFrame:
        v = self.view
        return pd.DataFrame(
            {
                "paper": v.index,
                "field": v.top_field.astype(int),
                "year": v.year.astype(int),
                "period": self.period_of(v.year).astype(int),
                "g": self.hyper.order,
            }
        )

    @cached_property
    def slices(self) -> dict[str, np.ndarray]:
        """Slice id -> row positions into the view.

        Slices are (field, period), each field over all periods, and each
        period pooled over fields.
        """
        pf = self.paper_frame
        out = {}
        for (f, p), rows in pf.groupby(["field", "period"], sort=True).indices.items():
            out[f"{TOP_FIELDS[f]}:{p}"] = np.sort(rows)
        for f, rows in pf.groupby("field", sort=True).indices.items():
            out[f"{TOP_FIELDS[f]}:{ALL}"] = np.sort(rows)
        for p, rows in pf.groupby("period", sort=True).indices.items():
            out[f"{ALL}:{p}"] = np.sort(rows)
        return dict(sorted(out.items()))

    @cached_property
    def distributions(self) -> dict[str, GroupSizeDistribution]:
        h = self.hyper
        order = h.order
        member_row = np.repeat(np.arange(h.n_edges), order)
        dists = {}
        for sid, rows in self.slices.items():
            g, L = np.unique(order[rows], return_counts=True)
            in_slice = np.zeros(h.n_edges, dtype=bool)
            in_slice[rows] = True
            members = h.members[in_slice[member_row]]
            d = GroupSizeDistribution(g.astype(np.int64), L.astype(np.int64), len(np.unique(members)))
            if self.cfg.fit.g_max > 0:
                d = d.capped(self.cfg.fit.g_max)
            dists[sid] = d
        return dists

    def hyper_tables(self) -> tuple[pd.DataFrame, pd.DataFrame]:
        pg = []
        for sid, d in self.distributions.items():
            df = d.to_frame()
            df.insert(0, "slice", sid)
            df["N"] = d.n_authors
            pg.append(df)
        pf = self.paper_frame
        ts = []
        for f, grp in pf.groupby("field", sort=True):
            t = grp.groupby("year", sort=True)["g"].mean().reset_index(name="mean_g")
            t.insert(0, "slice", TOP_FIELDS[f])
            ts.append(t)
        t = pf.groupby("year", sort=True)["g"].mean().reset_index(name="mean_g")
        t.insert(0, "slice", ALL)
        ts.append(t)
        return pd.concat(pg, ignore_index=True), pd.concat(ts, ignore_index=True)

    # ------------------------------------------------------------- synergy
    @cached_property
    def fits(self) -> dict:
        fc = self.cfg.fit
        starts = [(float(b), float(c)) for b in fc.beta_starts for c in fc.gamma_starts] or list(DEFAULT_STARTS)
        out = {}
        for sid, d in self.distributions.items():
            try:
                out[sid] = fit_synergy(
                    empirical_synergy(d),
                    d.count_map(),
                    min_count=fc.min_count,
                    starts=starts,
                    weight=None if fc.weight == "none" else fc.weight,
                    model=fc.model,
                    xatol=fc.xatol,
                    maxiter=fc.maxiter,
                )
            except NumericalError as e:
                log.warning("fit %s skipped: %s", sid, e)
                out[sid] = e
        return out

    def fit_tables(self) -> tuple[dict, pd.DataFrame, pd.DataFrame]:
        records = []
        curves = []
        for sid, fit in self.fits.items():
            d = self.distributions[sid]
            fld, per = sid.split(":")
            rec = {"slice": sid, "field": fld, "period": per, "n_papers": int(d.counts.sum()), "n_authors": d.n_authors}
            emp = empirical_synergy(d)
            cur = pd.DataFrame({"slice": sid, "g": d.sizes, "L_g": d.counts, "p_g": d.p, "R_emp": emp.R_emp})
            if isinstance(fit, Exception):
                rec["error"] = str(fit)
                cur["R_model"] = np.nan
                cur["included"] = False
            else:
                rec.update(fit.as_dict())
                cur["R_model"] = model_R(d.sizes, fit.alpha, fit.beta, fit.gamma, fit.model)
                cur["included"] = np.isin(d.sizes, fit.included_sizes)
            records.append(rec)
            curves.append(cur)
        trend = []
        periods = sorted({sid.split(":")[1] for sid in self.fits if not sid.endswith(f":{ALL}")})
        for per in periods:
            pooled = self.fits.get(f"{ALL}:{per}")
            per_field = [
                f.beta for sid, f in self.fits.items()
                if sid.endswith(f":{per}") and not sid.startswith(f"{ALL}:") and not isinstance(f, Exception)
            ]
            trend.append(
                {
                    "period": int(per),
                    "beta_pooled": np.nan if pooled is None or isinstance(pooled, Exception) else pooled.beta,
                    "beta_field_mean": float(np.mean(per_field)) if per_field else np.nan,
                    "n_fields": len(per_field),
                }
            )
        trend_df = pd.DataFrame(trend, columns=["period", "beta_pooled", "beta_field_mean", "n_fields"])
        return {"slices": records}, pd.concat(curves, ignore_index=True), trend_df

    # ------------------------------------------------------------ features
    @cached_property
    def history(self) -> AuthorHistory:
        return AuthorHistory(self.corpus, self.di)

    @cached_property
    def team(self):
        fc = self.cfg.features
        return team_features(self.view, self.history, fc.q, fc.ddof, fc.min_authors)

    def _per_paper_fit_params(self) -> pd.DataFrame:
        """Fitted parameters and R(g) per paper.

        With ``inference.mediator = "period"`` each paper takes its
        (field, period) fit, falling back to the field-wide fit when the
        period slice could not be fitted.
        """
        pf = self.paper_frame

        def usable(sid):
            fit = self.fits.get(sid)
            return fit is not None and not isinstance(fit, Exception)

        chosen = {}
        for f, p in set(zip(pf["field"], pf["period"])):
            field_sid = f"{TOP_FIELDS[f]}:{ALL}"
            period_sid = f"{TOP_FIELDS[f]}:{p}"
            if self.cfg.inference.mediator == "period" and usable(period_sid):
                chosen[(f, p)] = period_sid
            elif usable(field_sid):
                chosen[(f, p)] = field_sid
            else:
                chosen[(f, p)] = ""
        sid = [chosen[(f, p)] for f, p in zip(pf["field"], pf["period"])]
        params = {s: (self.fits[s].alpha, self.fits[s].beta, self.fits[s].gamma) if s else (np.nan,) * 3
                  for s in set(sid)}
        a, b, c = (np.array([params[s][i] for s in sid], dtype=float) for i in range(3))
        g = pf["g"].to_numpy(float)
        with np.errstate(invalid="ignore"):
            r = a * g**b * np.exp(-c * (g - 1.0))
        return pd.DataFrame({"fit_slice": sid, "alpha": a, "beta": b, "gamma": c, "R_at_g": r})

    @cached_property
    def paper_table(self) -> pd.DataFrame:
        """One row per analysed paper with every downstream variable."""
        v = self.view
        c = self.corpus
        gr = self.graph
        pf = self.paper_frame.copy()
        pf.insert(1, "paper_id", c.export_ids(v.index))
        pf.insert(3, "discipline", [TOP_FIELDS[f] for f in pf["field"]])
        pf = pd.concat([pf, self._per_paper_fit_params()], axis=1)
        pf["di"] = self.di.di_for(v.index)
        pf["reference_count"] = gr.out_degree()[v.index]
        pf["citations_5y"] = citations_within(gr, v.index, 5)
        pf["atypicality_z"] = c.atypicality[v.index]
        tf = self.team
        het = tf.features.drop(columns=["paper", "g"])
        flags = tf.flags.drop(columns=["paper"]).astype(int)
        return pd.concat([pf, het, flags], axis=1)

    # ----------------------------------------------------------- inference
    def _by_discipline(self):
        pt = self.paper_table
        ok = np.isfinite(pt["R_at_g"]) & np.isfinite(pt["di"])
        for name, grp in pt[ok].groupby("discipline", sort=True):
            yield name, grp

    def mediation_table(self) -> pd.DataFrame:
        ic = self.cfg.inference
        rows = []
        for name, grp in self._by_discipline():
            rec = {"discipline": name, "n_obs": len(grp)}
            if len(grp) < ic.min_papers:
                rec["error"] = f"fewer than {ic.min_papers} papers"
            else:
                try:
                    res = mediate(grp["g"], grp["R_at_g"], grp["di"], ic.n_boot, self.cfg.seed_for(f"mediate:{name}"),
                                  ic.level, ic.robust)
                    rec.update(res.as_dict())
                except SynergyLabError as e:
                    rec["error"] = str(e)
            rows.append(rec)
        return _frame(rows, ["discipline", "n_obs", "total_effect", "direct_effect", "path_a", "path_b",
                             "indirect_effect", "proportion_mediated", "suppression", "indirect_ci_low",
                             "indirect_ci_high", "p_total", "p_a", "p_b", "p_direct", "p_indirect", "error"])

    def moderation_table(self) -> pd.DataFrame:
        ic = self.cfg.inference
        rows = []
        for name, grp in self._by_discipline():
            for w in MODERATORS:
                sub = grp[np.isfinite(grp[w])]
                rec = {"discipline": name, "moderator": w, "n_obs": len(sub)}
                if len(sub) < ic.min_papers:
                    rec["error"] = f"fewer than {ic.min_papers} papers"
                else:
                    try:
                        rec.update(moderate(sub["di"], sub["g"], sub["R_at_g"], sub[w], w, ic.robust, ic.level).as_dict())
                    except SynergyLabError as e:
                        rec["error"] = str(e)
                rows.append(rec)
        return _frame(rows, ["discipline", "moderator", "n_obs", "beta4", "se", "ci_low", "ci_high", "p", "error"])

    def psm_tables(self) -> tuple[pd.DataFrame, pd.DataFrame]:
        ic = self.cfg.inference
        rows, bal = [], []
        for name, grp in self._by_discipline():
            sub = grp[np.isfinite(grp[list(PSM_COVARIATES)]).all(axis=1)]
            for tr in TREATMENTS:
                rec = {"discipline": name, "treatment": tr, "n_obs": len(sub)}
                if len(sub) < ic.min_papers:
                    rec["error"] = f"fewer than {ic.min_papers} papers"
                else:
                    try:
                        res = psm_att(sub, tr, list(PSM_COVARIATES), "di", ic.caliper_mult, id_col="paper", level=ic.level)
                        rec.update(res.as_dict())
                        b = res.balance.copy()
                        b.insert(0, "treatment", tr)
                        b.insert(0, "discipline", name)
                        bal.append(b)
                    except SynergyLabError as e:
                        rec["error"] = str(e)
                rows.append(rec)
        cols = ["discipline", "treatment", "n_obs", "att", "se", "ci_low", "ci_high", "n_treated", "n_matched",
                "caliper", "balanced", "max_abs_smd_after", "error"]
        bal_df = pd.concat(bal, ignore_index=True) if bal else pd.DataFrame(
            columns=["discipline", "treatment", "covariate", "smd_before", "smd_after"])
        return _frame(rows, cols), bal_df

    def position_table(self) -> pd.DataFrame:
        """Mean DI by byline position of key authors ("any key author in X")."""
        rows = []
        pt = self.paper_table
        for name, grp in pt[np.isfinite(pt["di"])].groupby("discipline", sort=True):
            groups = {
                "first": grp["key_first"] == 1,
                "middle": grp["key_middle"] == 1,
                "last": grp["key_last"] == 1,
                "none": grp["has_key_author"] == 0,
            }
            for pos, m in groups.items():
                x = grp.loc[m, "di"].to_numpy()
                rows.append({"discipline": name, "position": pos, "n": len(x),
                             "mean_di": x.mean() if len(x) else np.nan,
                             "median_di": np.median(x) if len(x) else np.nan})
        return _frame(rows, ["discipline", "position", "n", "mean_di", "median_di"])

    # --------------------------------------------------------------- modes
    @cached_property
    def modes(self):
        mc = self.cfg.modes
        roster = load_roster(self.cfg.resolve(mc.roster) if mc.roster else None)
        fm = assemble_features(self.paper_table, roster)
        z = zscore(fm)
        seed = self.cfg.seed_for("cluster")
        if mc.k > 0:
            selection = None
            k = mc.k
        else:
            selection = select_k(z, range(mc.k_min, mc.k_max + 1), seed, mc.n_init)
            k = selection.k
        model = cluster(z, k, seed, mc.n_init)
        return fm, z, selection, model

    def mode_tables(self) -> dict[str, pd.DataFrame]:
        fm, z, selection, model = self.modes
        pt = self.paper_table.set_index("paper").loc[z.index]
        out = {
            "modes": pd.DataFrame({"paper_id": pt["paper_id"].to_numpy(), "mode": model.labels}),
            "mode_profiles": model.profiles,
        }
        mo = mode_outcomes(
            model.labels,
            pt[["di", "citations_5y", "atypicality_z"]].reset_index(drop=True),
            model.k,
            {"discipline": pt["discipline"].to_numpy(), "decade": (pt["year"].to_numpy() // 10) * 10},
        )
        tests = mo.tests.rename(columns={"H": "kw_H", "p": "kw_p"})
        out["mode_outcomes"] = mo.summary.merge(tests, on="outcome", how="left")
        for name, tab in mo.by_group.items():
            t = tab.reset_index().rename(columns={"group": name})
            t.columns = [name] + [f"mode_{j}" for j in range(model.k)]
            out[f"mode_by_{name}"] = t
        out["k_selection"] = (
            selection.table.assign(chosen=lambda d: d["k"] == selection.k, elbow=lambda d: d["k"] == selection.elbow_k,
                                   no_structure=selection.no_structure)
            if selection is not None
            else pd.DataFrame({"k": [model.k], "wcss": [model.inertia], "silhouette": [model.silhouette],
                               "chosen": [True], "elbow": [False], "no_structure": [False]})
        )
        out["pca_synergy"] = self.pca_table()
        return out

    def pca_table(self) -> pd.DataFrame:
        rows = []
        for sid, fit in self.fits.items():
            fld, per = sid.split(":")
            if per == ALL and fld != ALL and not isinstance(fit, Exception):
                rows.append({"discipline": fld, "alpha": fit.alpha, "beta": fit.beta, "gamma": fit.gamma})
        cols = ["discipline", "alpha", "beta", "gamma", "pc1", "pc2", "archetype"]
        if len(rows) < 3:
            log.warning("pca: %d fitted disciplines, need 3", len(rows))
            return pd.DataFrame(columns=cols)
        params = pd.DataFrame(rows)
        n_comp = min(self.cfg.modes.pca_components, 3)
        res = pca_synergy(params, n_comp, self.cfg.seed_for("pca"))
        for j in range(n_comp):
            params[f"pc{j + 1}"] = res.scores[:, j]
        params["archetype"] = res.archetypes if res.archetypes is not None else -1
        load = pd.DataFrame(res.loadings.T, columns=[f"loading_{c}" for c in res.columns])
        load.insert(0, "explained_ratio", res.explained_ratio)
        load.insert(0, "component", [f"pc{j + 1}" for j in range(n_comp)])
        self._pca_loadings = load
        return params

    # ------------------------------------------------------------- effects
    def effects_table(self, med: pd.DataFrame, mod: pd.DataFrame, psm: pd.DataFrame) -> pd.DataFrame:
        """Signed effect and p-value per discipline and analysis (bubble plot data)."""
        rows = []
        for _, r in med.iterrows():
            if pd.notna(r.get("indirect_effect")):
                rows.append({"discipline": r["discipline"], "analysis": "mediation_indirect",
                             "effect": r["indirect_effect"], "p": r["p_indirect"]})
                rows.append({"discipline": r["discipline"], "analysis": "mediation_direct",
                             "effect": r["direct_effect"], "p": r["p_direct"]})
        for _, r in mod.iterrows():
            if pd.notna(r.get("beta4")):
                rows.append({"discipline": r["discipline"], "analysis": f"moderation_{r['moderator']}",
                             "effect": r["beta4"], "p": r["p"]})
        for _, r in psm.iterrows():
            if pd.notna(r.get("att")):
                z = r["att"] / r["se"] if r["se"] > 0 else np.inf
                rows.append({"discipline": r["discipline"], "analysis": f"psm_{r['treatment']}",
                             "effect": r["att"], "p": float(2 * stats.norm.sf(abs(z)))})
        return _frame(rows, ["discipline", "analysis", "effect", "p"])


def _frame(rows: list[dict], columns: list[str]) -> pd.DataFrame:
    df = pd.DataFrame(rows)
    for c in columns:
        if c not in df.columns:
            df[c] = np.nan if c != "error" else ""
    df = df[columns]
    if "error" in df.columns:
        df["error"] = df["error"].fillna("")
    return df


def citations_within(graph, nodes: np.ndarray, w: int) -> np.ndarray:
    """Dated citers of each node published within [t, t + w]."""
    nodes = np.asarray(nodes, dtype=np.int64)
    ptr = graph.bwd_ptr
    cnt = ptr[nodes + 1] - ptr[nodes]
    owner = np.repeat(np.arange(len(nodes)), cnt)
    flat = np.repeat(ptr[nodes], cnt) + (np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt))
    yc = graph.year[graph.bwd_idx[flat]]
    t = graph.year[nodes][owner]
    ok = (yc != G_NO_YEAR) & (yc >= t) & (yc <= t + w)
    return np.bincount(owner[ok], minlength=len(nodes))
