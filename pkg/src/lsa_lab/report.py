"""Summaries, x/y series files and figures built from a ``results.csv``."""

import csv
from collections import defaultdict
import math
from pathlib import Path
import sys

import numpy as np

from .errors import ParseError


def _num(text):
    if text in ("", None):
        return None
    return float(text)


def load_results(results_dir):
    path = Path(results_dir) / "results.csv"
    if not path.is_file():
        raise ParseError(f"no results.csv in {results_dir}")
    with path.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in ("n", "p", "alpha", "estimate", "ci_low", "ci_high", "bound_total"):
            r[k] = _num(r[k])
    return rows


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x`` over the positive points."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def _raw_scale(quantity, n, p):
    """Map a scaled row value back to the unscaled error measure used for slopes."""
    if quantity == "scaled_mse":
        return lambda v: v / (n / 2)
    if quantity == "scaled_rms":
        return lambda v: v**2 / (n / 2)
    if quantity == "scaled_pr_moment":
        return lambda v: v / math.sqrt(n / 2)
    return lambda v: v


def _groups(rows):
    """Series keyed by (experiment, quantity, p, alpha-or-None).

    Rows sharing a horizon n inside a (quantity, p) block were produced with
    a fixed alpha list, so those are split by alpha; otherwise alpha varies
    with n and the block stays whole.
    """
    blocks = defaultdict(list)
    for r in rows:
        blocks[(r["experiment"], r["quantity"], r["p"])].append(r)
    out = {}
    for (exp, qty, p), rs in blocks.items():
        ns = [r["n"] for r in rs]
        if exp == "bias":
            by_n = defaultdict(list)
            for r in rs:
                by_n[r["n"]].append(r)
            for n, sub in by_n.items():
                out[(exp, qty, p, ("n", n))] = sorted(sub, key=lambda r: r["alpha"])
        elif len(set(ns)) < len(ns):
            by_a = defaultdict(list)
            for r in rs:
                by_a[r["alpha"]].append(r)
            for a, sub in by_a.items():
                out[(exp, qty, p, ("alpha", a))] = sorted(sub, key=lambda r: r["n"])
        else:
            out[(exp, qty, p, None)] = sorted(rs, key=lambda r: r["n"])
    return out


def _violations(rs):
    count = 0
    for r in rs:
        b, lo = r["bound_total"], r["ci_low"]
        if r["eligible"] == "true" and b is not None and lo is not None and lo > b:
            count += 1
    return count


def _label(key):
    exp, qty, p, sub = key
    parts = [exp, qty]
    if p is not None:
        parts.append(f"p{p:g}")
    if sub is not None:
        parts.append(f"{sub[0]}{sub[1]:.6g}")
    return "_".join(parts).replace("-", "_")


def _plot(path, x, rs, xlabel, title):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    est = np.array([r["estimate"] for r in rs], float)
    lo = np.array([r["ci_low"] if r["ci_low"] is not None else r["estimate"] for r in rs], float)
    hi = np.array([r["ci_high"] if r["ci_high"] is not None else r["estimate"] for r in rs], float)
    bound = np.array([r["bound_total"] if r["bound_total"] is not None else np.nan for r in rs], float)
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.errorbar(x, est, yerr=[est - lo, hi - est], fmt="o-", ms=4, capsize=2, label="empirical")
    if np.isfinite(bound).any():
        ax.plot(x, bound, "s--", ms=3, label="bound")
    ax.set_xscale("log")
    if (est > 0).all():
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_title(title, fontsize=9)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def summarize(rows):
    """Per-series statistics: slope, violation count, row count."""
    result = []
    for key, rs in _groups(rows).items():
        exp, qty, p, sub = key
        entry = {"key": key, "label": _label(key), "rows": rs, "violations": _violations(rs),
                 "slope": None, "slope_of": None}
        if exp == "bias":
            entry["xname"] = "alpha"
            entry["slope"] = loglog_slope([r["alpha"] for r in rs], [r["estimate"] for r in rs])
            entry["slope_of"] = "log(bias) vs log(alpha)"
        else:
            entry["xname"] = "n"
            if qty in ("scaled_mse", "scaled_rms", "scaled_pr_moment"):
                raw = [_raw_scale(qty, r["n"], r["p"])(r["estimate"]) for r in rs]
                entry["slope"] = loglog_slope([r["n"] for r in rs], raw)
                entry["slope_of"] = ("log(MSE) vs log(n)" if qty != "scaled_pr_moment"
                                     else "log(moment) vs log(n)")
        result.append(entry)
    return result


def cmd_report(results_dir, out=None, stream=None):
    """Write ``summary.txt``, one series file and one PNG per series; return the summary text."""
    rows = load_results(results_dir)
    if not rows:
        raise ParseError(f"results.csv in {results_dir} has no rows")
    out = Path(out or results_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    for entry in summarize(rows):
        rs = entry["rows"]
        lines.append(f"[{entry['label']}] rows={len(rs)} violations={entry['violations']}")
        if entry["slope_of"]:
            lines.append(f"  slope {entry['slope_of']}: {entry['slope']:.6g}")
        lines.append(f"  {'x':>12} {'estimate':>14} {'ci_high':>14} {'bound':>14} eligible")
        for r in rs:
            x = r[entry["xname"]]
            hi = r["ci_high"] if r["ci_high"] is not None else math.nan
            b = r["bound_total"] if r["bound_total"] is not None else math.nan
            lines.append(f"  {x:>12.6g} {r['estimate']:>14.6g} {hi:>14.6g} {b:>14.6g} {r['eligible']}")
        xs = [r[entry["xname"]] for r in rs]
        series = out / f"series_{entry['label']}.txt"
        with series.open("w", encoding="utf-8") as fh:
            fh.write(f"# {entry['xname']} estimate ci_low ci_high bound_total\n")
            for x, r in zip(xs, rs):
                vals = [x, r["estimate"], r["ci_low"], r["ci_high"], r["bound_total"]]
                fh.write(" ".join("nan" if v is None else format(v, ".17g") for v in vals) + "\n")
        if len(rs) > 1 and all(x and x > 0 for x in xs):
            _plot(out / f"figure_{entry['label']}.png", xs, rs, entry["xname"], entry["label"])
    text = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(text, encoding="utf-8")
    (stream or sys.stdout).write(text)
    return text
