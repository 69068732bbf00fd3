"""Shared plotting layer: schema-checked CSV loading and figure rendering.

Consumes only the aggregated/diagnostic CSVs emitted by the experiment CLI;
no statistics are recomputed here. Rendering is deterministic: fixed style,
fixed SVG hash salt, no timestamps in the output metadata.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from statistics import median

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "mindex-plots"

SCHEMAS = {
    "fig1": ["d", "alpha", "epsilon", "seed", "test_error", "achieved"],
    "fig1_agg": ["d", "epsilon", "mean_min_alpha", "n_seeds"],
    "fig2": ["loss", "d", "ratio", "seed", "cos_best"],
    "fig2_agg": ["loss", "d", "ratio", "p30", "p50", "p70"],
    "noise": ["d", "n", "seed", "noise_op_norm"],
    "power": ["d", "n", "T1", "eps0", "seed",
              "max_rel_dev_empirical", "max_rel_dev_population"],
}

FIG1_COLORS = ["#9ecae1", "#4292c6", "#084594", "#041f42"]
LOSS_COLORS = {"huber": "#d7301f", "mse": "#2171b5",
               "pseudo_huber": "#fc8d59", "l1": "#74a9cf"}


class SchemaError(ValueError):
    """CSV header does not match the declared schema."""


@dataclass(frozen=True)
class PlotSpec:
    """One rendering request."""

    input: str | Path
    kind: str                      # fig1 | fig2 | noise | power
    output: str | Path
    fmt: str = "svg"
    log_x: bool | None = None      # default chosen per kind
    band_alpha: float = 0.25


def load_csv(path: str | Path, kind: str) -> list[dict]:
    """Read a CSV and enforce the schema for ``kind`` (hard error naming the
    offending column). Returns the rows with numeric fields parsed."""
    want = SCHEMAS[kind]
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        got = reader.fieldnames or []
        missing = [c for c in want if c not in got]
        extra = [c for c in got if c not in want]
        if missing or extra:
            parts = []
            if missing:
                parts.append(f"missing column(s) {missing}")
            if extra:
                parts.append(f"unexpected column(s) {extra}")
            raise SchemaError(f"{path.name}: " + "; ".join(parts))
        rows = []
        for raw in reader:
            row = {}
            for key, val in raw.items():
                try:
                    row[key] = float(val)
                except ValueError:
                    row[key] = val
            rows.append(row)
    if not rows:
        raise SchemaError(f"{path.name}: no data rows")
    return rows


def _fig1_axes(ax, rows, log_x):
    eps_values = sorted({row["epsilon"] for row in rows}, reverse=True)
    for color, eps in zip(FIG1_COLORS, eps_values):
        pts = sorted((row["d"], row["mean_min_alpha"]) for row in rows
                     if row["epsilon"] == eps
                     and isinstance(row["mean_min_alpha"], float))
        if not pts:
            continue
        ds, alphas = zip(*pts)
        ax.plot(ds, alphas, "o-", color=color, label=f"eps = {eps:g}")
    if log_x:
        ax.set_xscale("log", base=2)
    ax.set_xlabel("dimension d")
    ax.set_ylabel("minimal exponent alpha")
    ax.set_title("Minimal sample-size exponent to reach test error eps")
    ax.legend()


def _fig2_axes(ax, rows, log_x, band_alpha):
    series = sorted({(row["loss"], row["d"]) for row in rows})
    for loss_kind, d in series:
        pts = sorted((row["ratio"], row["p30"], row["p50"], row["p70"])
                     for row in rows
                     if row["loss"] == loss_kind and row["d"] == d)
        ratio, p30, p50, p70 = (list(t) for t in zip(*pts))
        color = LOSS_COLORS.get(loss_kind, "#555555")
        ax.plot(ratio, p50, "o-", color=color,
                label=f"{loss_kind}, d = {d:g}")
        ax.fill_between(ratio, p30, p70, color=color, alpha=band_alpha,
                        linewidth=0)
    if log_x:
        ax.set_xscale("log")
    ax.set_ylim(-0.05, 1.05)
    ax.set_xlabel("sample complexity ratio n/d")
    ax.set_ylabel("cos(best)")
    ax.set_title("Alignment vs samples: median with 30-70 percentile band")
    ax.legend()


def _noise_axes(ax, rows, log_x):
    # raw per-seed points plus the median trend
    by_n = {}
    for row in rows:
        by_n.setdefault(row["n"], []).append(row["noise_op_norm"])
    ns = sorted(by_n)
    medians = [median(by_n[n]) for n in ns]
    for n in ns:
        ax.plot([n] * len(by_n[n]), by_n[n], ".", color="#bdbdbd", ms=4)
    ax.plot(ns, medians, "o-", color="#084594", label="median")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("sample size n")
    ax.set_ylabel("operator-norm noise")
    ax.set_title("Finite-sample noise of the preprocessing matrix")
    ax.legend()


def _power_axes(ax, rows, log_x):
    markers = {"max_rel_dev_empirical": ("o-", "empirical oracle"),
               "max_rel_dev_population": ("s--", "population oracle")}
    t1s = sorted({row["T1"] for row in rows})
    for T1 in t1s:
        sub = [row for row in rows if row["T1"] == T1]
        by_eps = {}
        for row in sub:
            by_eps.setdefault(row["eps0"], []).append(row)
        eps = sorted(by_eps)
        for key, (style, label) in markers.items():
            med = [median(r[key] for r in by_eps[e]) for e in eps]
            ax.plot(eps, med, style, label=f"{label}, T1 = {T1:g}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("initialization radius")
    ax.set_ylabel("max relative deviation")
    ax.set_title("Stage-1 features vs power-iteration oracles")
    ax.legend()


def render(spec: PlotSpec) -> Path:
    """Render one figure; returns the written path.

    Raises SchemaError before creating any file when the CSV is rejected.
    """
    kind = spec.kind
    load_kind = {"fig1": "fig1_agg", "fig2": "fig2_agg",
                 "noise": "noise", "power": "power"}.get(kind)
    if load_kind is None:
        raise ValueError(f"unknown figure kind {spec.kind!r}")
    rows = load_csv(spec.input, load_kind)
    log_x = spec.log_x
    if log_x is None:
        log_x = kind in ("fig1", "noise", "power")
    fig, ax = plt.subplots(figsize=(7.0, 4.6), dpi=150)
    try:
        if kind == "fig1":
            _fig1_axes(ax, rows, log_x)
        elif kind == "fig2":
            _fig2_axes(ax, rows, log_x, spec.band_alpha)
        elif kind == "noise":
            _noise_axes(ax, rows, log_x)
        else:
            _power_axes(ax, rows, log_x)
        out = Path(spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, format=spec.fmt, metadata=_no_date_metadata(spec.fmt),
                    bbox_inches="tight")
    finally:
        plt.close(fig)
    return out


def _no_date_metadata(fmt: str):
    if fmt == "svg":
        return {"Date": None}
    if fmt == "png":
        return {"Software": "mindex-plots"}
    return None


def make_arg_parser(description: str):
    import argparse

    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--input", required=True, help="input CSV")
    parser.add_argument("--output", required=True, help="output image path")
    parser.add_argument("--format", default="svg", choices=["svg", "png", "pdf"])
    return parser
