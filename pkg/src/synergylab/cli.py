"""Command-line front end: ``synergylab <subcommand> --config run.toml``.

Exit codes: 0 success, 2 configuration or usage error, 3 data error,
4 numerical failure. Failures print one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, SynergyLabError

log = logging.getLogger("synergylab")

COMMANDS = (
    "ingest",
    "di",
    "hyper",
    "synergy-fit",
    "features",
    "mediate",
    "moderate",
    "psm",
    "cluster",
    "report",
    "synth",
    "all",
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"usage: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="synergylab", description="Disruption, team-synergy and team-composition analytics.")
    p.add_argument("--version", action="version", version=f"synergylab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--config", "-c", help="run configuration (TOML)")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value; repeatable")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--verbose", "-v", action="store_true")
        return sp

    add("ingest", "load and validate the corpus; write the graph cache and ingest report")
    d = add("di", "disruption index for every dated paper")
    d.add_argument("--l", type=int, help="shared-reference threshold")
    d.add_argument("--window", type=int, help="citation window in years (negative: unbounded)")
    add("hyper", "group-size distributions and mean team size by year")
    f = add("synergy-fit", "empirical synergy curves and model fits per slice")
    f.add_argument("--weight", choices=["none", "Lg"])
    f.add_argument("--model", choices=["standard", "reduced"])
    add("features", "team heterogeneity features and key-author flags")
    add("mediate", "team size -> synergy -> DI mediation per discipline")
    add("moderate", "synergy x heterogeneity interaction models per discipline")
    add("psm", "key-author effects on DI by propensity-score matching")
    add("cluster", "knowledge-production modes and PCA of synergy parameters")
    add("report", "all tables plus SVG figures")
    add("synth", "write a synthetic corpus with a ground-truth ledger")
    add("all", "every stage from ingest to report")
    return p


def _config(args) -> RunConfig:
    cfg = load_config(args.config, args.overrides)
    if args.out:
        cfg.output.dir = str(Path(args.out).resolve())
    if getattr(args, "l", None) is not None:
        cfg.di.l = args.l
    if getattr(args, "window", None) is not None:
        cfg.di.window = args.window
    if getattr(args, "weight", None):
        cfg.fit.weight = args.weight
    if getattr(args, "model", None):
        cfg.fit.model = args.model
    return cfg.validate()


def run(command: str, cfg: RunConfig) -> list[Path]:
    """Run one subcommand; returns the artifact paths written."""
    if command == "synth":
        return _synth(cfg)
    from .pipeline import Pipeline

    pl = Pipeline(cfg)
    pl.write_run_record(command)
    steps = {
        "ingest": _ingest,
        "di": _di,
        "hyper": _hyper,
        "synergy-fit": _fit,
        "features": _features,
        "mediate": _mediate,
        "moderate": _moderate,
        "psm": _psm,
        "cluster": _cluster,
        "report": _report,
    }
    if command == "all":
        written = []
        for name in ("ingest", "di", "hyper", "synergy-fit", "features", "report"):
            written += steps[name](pl)
        return written
    return steps[command](pl)


def _synth(cfg: RunConfig) -> list[Path]:
    from .synthlab import SynthSpec, write_synth

    sc = cfg.synth
    out = cfg.resolve(sc.out_dir or cfg.input.dir)
    if not (sc.out_dir or cfg.input.dir):
        raise ConfigError("synth needs synth.out_dir or input.dir")
    seed = sc.seed if sc.seed >= 0 else cfg.seed_for("synth") % (2**31)
    spec = SynthSpec(seed=seed, n_papers=sc.n_papers, g_max=sc.g_max, elite_fraction=sc.elite_fraction,
                     elite_multiplier=sc.elite_multiplier, years=(cfg.corpus.year_min, cfg.corpus.year_max))
    write_synth(out, spec)
    return sorted(out.glob("*.csv")) + [out / "ledger.json"]


def _ingest(pl) -> list[Path]:
    from .graph import save_graph, window_diagnostics
    from .pipeline import write_json

    c = pl.corpus
    rep = c.report.as_dict()
    rep["self_citations_dropped"] = pl.graph.n_self_loops
    diag = window_diagnostics(pl.graph, range(c.n_papers))
    rep["citers_undated"] = diag.undated_citers
    rep["citers_before_cited"] = diag.early_citers
    paths = [write_json(rep, pl.out / "ingest_report.json")]
    save_graph(pl.graph, pl.out / "graph.bin")
    return paths + [pl.out / "graph.bin"]


def _di(pl) -> list[Path]:
    from .pipeline import write_csv

    df = pl.di.to_frame(pl.corpus)
    return [write_csv(df, pl.out / "di.csv")]


def _hyper(pl) -> list[Path]:
    from .pipeline import write_csv

    pg, ts = pl.hyper_tables()
    return [write_csv(pg, pl.out / "pg.csv"), write_csv(ts, pl.out / "teamsize.csv")]


def _fit(pl) -> list[Path]:
    from .pipeline import write_csv, write_json

    fits, curves, trend = pl.fit_tables()
    return [
        write_json(fits, pl.out / "fits.json"),
        write_csv(curves, pl.out / "rg_curves.csv"),
        write_csv(trend, pl.out / "beta_trend.csv"),
    ]


def _features(pl) -> list[Path]:
    from .pipeline import write_csv

    pt = pl.paper_table
    tf = pl.team
    feats = pt[["paper_id", "discipline", "year", "g", "R_at_g", "di", "citations_5y", "reference_count",
                "atypicality_z", "var_age", "var_productivity", "var_citations", "var_di", "var_disciplinary",
                "gender_proportion"]]
    flag_cols = [c for c in tf.flags.columns if c != "paper"]
    flags = pt[["paper_id", "discipline", *flag_cols]]
    th = tf.thresholds.to_frame()
    if len(th):
        from .corpus import TOP_FIELDS

        th["field"] = [TOP_FIELDS[f] for f in th["field"]]
    else:
        th = th.reindex(columns=["field", "attribute", "threshold"])
    return [
        write_csv(feats, pl.out / "team_features.csv"),
        write_csv(flags, pl.out / "key_flags.csv"),
        write_csv(th, pl.out / "key_thresholds.csv"),
    ]


def _mediate(pl) -> list[Path]:
    from .pipeline import write_csv

    return [write_csv(pl.mediation_table(), pl.out / "mediation.csv")]


def _moderate(pl) -> list[Path]:
    from .pipeline import write_csv

    return [write_csv(pl.moderation_table(), pl.out / "moderation.csv")]


def _psm(pl) -> list[Path]:
    from .pipeline import write_csv

    res, bal = pl.psm_tables()
    return [
        write_csv(res, pl.out / "psm.csv"),
        write_csv(bal, pl.out / "psm_balance.csv"),
        write_csv(pl.position_table(), pl.out / "positions.csv"),
    ]


def _cluster(pl) -> list[Path]:
    from .pipeline import write_csv

    paths = [write_csv(df, pl.out / f"{name}.csv") for name, df in pl.mode_tables().items()]
    if getattr(pl, "_pca_loadings", None) is not None:
        paths.append(write_csv(pl._pca_loadings, pl.out / "pca_loadings.csv"))
    return paths


def _report(pl) -> list[Path]:
    import pandas as pd

    from . import report
    from .pipeline import write_csv

    paths = []
    fits, curves, _ = pl.fit_tables()
    paths += _fit(pl)
    med = pl.mediation_table()
    mod = pl.moderation_table()
    psm, _ = pl.psm_tables()
    paths += _mediate(pl) + _moderate(pl) + _psm(pl)
    effects = pl.effects_table(med, mod, psm)
    paths.append(write_csv(effects, pl.out / "effects.csv"))
    paths += _cluster(pl)
    fig = pl.out / "figures"
    fig.mkdir(parents=True, exist_ok=True)
    fit_df = pd.DataFrame([r for r in fits["slices"] if "beta" in r])
    if len(fit_df):
        fit_df = fit_df[~fit_df["slice"].str.endswith(":all")][["slice", "beta", "gamma"]]
    else:
        fit_df = pd.DataFrame(columns=["slice", "beta", "gamma"])
    paths += [
        report.plot_rg_curves(curves, fig / "rg_curves.svg"),
        report.plot_beta_gamma(fit_df, fig / "beta_gamma.svg"),
        report.plot_effects(effects, fig / "effects.svg"),
        report.plot_positions(pl.position_table(), fig / "positions.svg"),
        report.plot_mode_heatmap(pl.modes[3].profiles, fig / "mode_heatmap.svg"),
    ]
    return paths


def _fail(e: SynergyLabError | Exception, code: int) -> int:
    msg = str(e).replace("\n", " ")
    print(json.dumps({"error": type(e).__name__, "exit_code": code, "message": msg}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        cfg = _config(args)
        written = run(args.command, cfg)
    except SynergyLabError as e:
        return _fail(e, e.exit_code)
    except (OSError, ValueError) as e:
        return _fail(e, 3)
    for p in written:
        log.info("wrote %s", p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
