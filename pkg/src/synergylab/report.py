"""Static SVG figures from the CSV artifacts.

Figures are drawn with matplotlib's object API (no global pyplot state);
the SVG hash salt and date metadata are pinned so reruns are byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

SVG_META = {"Date": None}


def _save(fig: Figure, path: Path) -> Path:
    with matplotlib.rc_context({"svg.hashsalt": "synergylab", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata=SVG_META)
    return path


def plot_rg_curves(curves: pd.DataFrame, path: Path, slice_suffix: str = ":all") -> Path:
    fig = Figure(figsize=(7, 4.5))
    ax = fig.add_subplot()
    for sid, grp in curves[curves["slice"].str.endswith(slice_suffix)].groupby("slice", sort=True):
        grp = grp[grp["included"].astype(bool)] if grp["included"].astype(bool).any() else grp
        line = ax.plot(grp["g"], grp["R_emp"], "o", ms=3, label=sid.split(":")[0])[0]
        if grp["R_model"].notna().any():
            ax.plot(grp["g"], grp["R_model"], "-", color=line.get_color(), lw=1)
    ax.set_xlabel("team size g")
    ax.set_ylabel("synergy factor R(g)")
    ax.legend(fontsize=6, ncol=2)
    return _save(fig, path)


def plot_beta_gamma(fits: pd.DataFrame, path: Path) -> Path:
    fig = Figure(figsize=(5, 4.5))
    ax = fig.add_subplot()
    ok = fits.dropna(subset=["beta", "gamma"]) if {"beta", "gamma"} <= set(fits.columns) else fits.iloc[:0]
    ax.scatter(ok["gamma"], ok["beta"], s=14)
    for _, r in ok.iterrows():
        ax.annotate(r["slice"], (r["gamma"], r["beta"]), fontsize=5)
    if len(ok):
        gmax = float(ok["gamma"].max()) * 1.1 or 1.0
        xs = np.linspace(0, gmax, 50)
        ax.plot(xs, xs, "k--", lw=0.8, label="beta = gamma")
        ax.legend(fontsize=6)
    ax.set_xlabel("gamma")
    ax.set_ylabel("beta")
    return _save(fig, path)


def plot_effects(effects: pd.DataFrame, path: Path) -> Path:
    fig = Figure(figsize=(8, 5))
    ax = fig.add_subplot()
    disc = sorted(effects["discipline"].unique())
    ana = sorted(effects["analysis"].unique())
    if len(effects):
        x = effects["analysis"].map({a: i for i, a in enumerate(ana)})
        y = effects["discipline"].map({d: i for i, d in enumerate(disc)})
        p = effects["p"].astype(float).clip(lower=1e-300)
        size = 10 + 20 * np.minimum(-np.log10(p), 15)
        color = np.where(effects["effect"] > 0, "tab:red", "tab:blue")
        ax.scatter(x, y, s=size, c=color, alpha=0.7)
    ax.set_xticks(range(len(ana)))
    ax.set_xticklabels(ana, rotation=60, ha="right", fontsize=6)
    ax.set_yticks(range(len(disc)))
    ax.set_yticklabels(disc, fontsize=6)
    fig.subplots_adjust(bottom=0.35, left=0.2)
    return _save(fig, path)


def plot_positions(pos: pd.DataFrame, path: Path) -> Path:
    fig = Figure(figsize=(7, 4))
    ax = fig.add_subplot()
    order = ["first", "middle", "last", "none"]
    disc = sorted(pos["discipline"].unique())
    width = 0.8 / len(order)
    for i, p in enumerate(order):
        sub = pos[pos["position"] == p].set_index("discipline").reindex(disc)
        ax.bar(np.arange(len(disc)) + i * width, sub["mean_di"].fillna(0), width, label=p)
    ax.set_xticks(np.arange(len(disc)) + 0.4 - width / 2)
    ax.set_xticklabels(disc, rotation=45, ha="right", fontsize=6)
    ax.set_ylabel("mean DI")
    ax.legend(fontsize=6)
    fig.subplots_adjust(bottom=0.3)
    return _save(fig, path)


def plot_mode_heatmap(profiles: pd.DataFrame, path: Path) -> Path:
    feats = [c for c in profiles.columns if c not in ("mode", "n", "share")]
    fig = Figure(figsize=(8, 3 + 0.3 * len(profiles)))
    ax = fig.add_subplot()
    M = profiles[feats].to_numpy(float)
    lim = float(np.nanmax(np.abs(M))) if M.size else 1.0
    im = ax.imshow(M, cmap="RdBu_r", vmin=-lim, vmax=lim, aspect="auto")
    ax.set_xticks(range(len(feats)))
    ax.set_xticklabels(feats, rotation=70, ha="right", fontsize=6)
    ax.set_yticks(range(len(profiles)))
    ax.set_yticklabels([f"mode {m} ({s:.0%})" for m, s in zip(profiles["mode"], profiles["share"])], fontsize=7)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.subplots_adjust(bottom=0.35)
    return _save(fig, path)
