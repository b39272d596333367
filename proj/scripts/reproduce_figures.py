#!/usr/bin/env python3
"""Regenerate the data tables (and, when matplotlib is installed, the plots)
for every reproduction experiment.

Only public `hashrate` subcommands are used. Each table is written as CSV
next to a manifest so `hashrate replay` can re-check it later.

Usage: scripts/reproduce_figures.py [--hashrate build/tools/hashrate]
                                    [--out figures] [--quick]
"""

import argparse
import csv
import pathlib
import subprocess
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def run(exe, out_dir, name, args):
    target = out_dir / f"{name}.csv"
    cmd = [str(exe), "--quiet", "--format", "csv", "--out", str(target), *args]
    print("+", " ".join(cmd), file=sys.stderr)
    subprocess.run(cmd, check=True)
    with target.open(newline="") as f:
        return list(csv.DictReader(f))


def experiments(quick):
    t = (lambda full, small: small if quick else full)
    fixtures = ROOT / "tests" / "fixtures"
    return {
        "double_spend": ["experiment", "double-spend", "--q", "0.05", "0.1", "0.15", "0.2", "0.25",
                         "0.3", "0.35", "0.4", "0.45", "--max-z", "30", "--mc-trials", str(t(100000, 2000))],
        "status_accuracy": ["experiment", "status-accuracy", "--summary", "--trials", str(t(10000, 500))],
        "status_accuracy_raw": ["experiment", "status-accuracy", "--trials", str(t(2000, 200))],
        "chernoff": ["experiment", "chernoff", "--trials", str(t(100000, 2000))],
        "mom_windows": ["experiment", "mom-windows", "--summary", "--trials", str(t(1000, 100))],
        "mom_windows_raw": ["experiment", "mom-windows", "--trials", str(t(1000, 100))],
        "deployment": ["experiment", "deployment", "--trials", str(t(3000, 200))],
        "coverage": ["experiment", "coverage", "--trials", str(t(1000, 100)), "--bootstrap", str(t(1000, 200))],
        "depth_worst_rpb10": ["experiment", "depth", "--mode", "worst", "--reports-per-block", "10",
                              "--trials", str(t(300, 40))],
        "depth_point_rpb1": ["experiment", "depth", "--mode", "point", "--reports-per-block", "1",
                             "--trials", str(t(300, 40))],
        "fixture_bitcoin": ["experiment", "fixture-windows", "--chain", "bitcoin",
                            "--headers", str(fixtures / "bitcoin_headers.jsonl"), "--bootstrap", str(t(1000, 100))],
        "fixture_ethereum": ["experiment", "fixture-windows", "--chain", "ethereum",
                             "--headers", str(fixtures / "ethereum_headers.jsonl"), "--bootstrap", str(t(1000, 100))],
    }


def col(rows, key, cast=float):
    return [cast(r[key]) for r in rows]


def plot(tables, out_dir):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not available; tables only", file=sys.stderr)
        return

    def save(fig, name):
        fig.tight_layout()
        fig.savefig(out_dir / f"{name}.png", dpi=120)
        plt.close(fig)

    ds = tables["double_spend"]
    fig, ax = plt.subplots()
    for q in sorted({r["q"] for r in ds}, key=float):
        rows = [r for r in ds if r["q"] == q]
        ax.semilogy(col(rows, "z", int), col(rows, "nakamoto"), label=f"q={q}")
    ax.set_xlabel("confirmations z")
    ax.set_ylabel("double-spend probability")
    ax.legend(fontsize="small")
    save(fig, "double_spend")

    fig, ax = plt.subplots()
    raw = tables["status_accuracy_raw"]
    groups = sorted({r["n"] for r in raw}, key=int)
    ax.boxplot([col([r for r in raw if r["n"] == n], "ratio") for n in groups], tick_labels=groups, whis=(10, 90))
    ax.axhspan(0.9, 1.1, alpha=0.15)
    ax.set_xlabel("reports in window")
    ax.set_ylabel("estimate / truth")
    save(fig, "status_accuracy")

    ch = tables["chernoff"]
    fig, ax = plt.subplots()
    for n in sorted({r["n"] for r in ch}, key=int):
        rows = [r for r in ch if r["n"] == n]
        line = ax.semilogy(col(rows, "pi"), col(rows, "upper_bound"), label=f"bound n={n}")[0]
        ax.semilogy(col(rows, "pi"), col(rows, "upper_frequency"), "o", color=line.get_color())
    ax.set_xlabel("pi")
    ax.set_ylabel("P(estimate > (1+pi) truth)")
    ax.legend(fontsize="small")
    save(fig, "chernoff")

    mw = tables["mom_windows_raw"]
    fig, ax = plt.subplots()
    groups = sorted({r["window_seconds"] for r in mw}, key=float)
    ax.boxplot([col([r for r in mw if r["window_seconds"] == w], "ratio") for w in groups],
               tick_labels=groups, whis=(10, 90))
    ax.set_yscale("log")
    ax.set_xlabel("window length (s)")
    ax.set_ylabel("estimate / truth")
    save(fig, "mom_windows")

    dp = tables["deployment"]
    fig, ax = plt.subplots()
    ax.errorbar(col(dp, "reporters", int), col(dp, "mean_error"), yerr=col(dp, "ci95_half_width"), fmt="o-")
    ax.set_xlabel("reporting miners")
    ax.set_ylabel("mean relative error")
    save(fig, "deployment")

    fig, ax = plt.subplots()
    for name in ("fixture_bitcoin", "fixture_ethereum"):
        rows = tables[name]
        ax.plot(col(rows, "end_height", int), col(rows, "ratio"), "o-", label=name.split("_")[1])
    ax.axhline(1.0, color="grey", lw=0.5)
    ax.set_xlabel("window end height")
    ax.set_ylabel("estimate / naive")
    ax.legend()
    save(fig, "fixture_windows")


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--hashrate", default=str(ROOT / "build" / "tools" / "hashrate"))
    p.add_argument("--out", default=str(ROOT / "figures"))
    p.add_argument("--quick", action="store_true", help="small trial counts for a smoke run")
    a = p.parse_args()
    out_dir = pathlib.Path(a.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = {name: run(a.hashrate, out_dir, name, args) for name, args in experiments(a.quick).items()}
    plot(tables, out_dir)


if __name__ == "__main__":
    main()
