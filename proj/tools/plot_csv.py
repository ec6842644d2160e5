#!/usr/bin/env python3
"""Plot worst-case W_T and latency against n from one or more run CSVs.

    python3 tools/plot_csv.py out/lemma_grid.csv out/silent_compare.csv -o plots/

One PNG per metric, one line per (synchronizer, strategy).
"""

import argparse
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

METRICS = {
    "w_max": "max honest sends before next QC (W_T)",
    "latency_max": "max t*_T - T (ticks)",
    "latency_gst": "t*_GST - GST (ticks)",
    "honest_sends": "honest sends per run",
}


def load(paths):
    frames = [pd.read_csv(p, comment="#") for p in paths]
    return pd.concat(frames, ignore_index=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", nargs="+", type=pathlib.Path)
    ap.add_argument("-o", "--out", type=pathlib.Path, default=pathlib.Path("plots"))
    args = ap.parse_args()

    df = load(args.csv)
    df = df[df["lemma"] == "pass"]
    args.out.mkdir(parents=True, exist_ok=True)
    for col, label in METRICS.items():
        worst = df.groupby(["synchronizer", "strategy", "n"])[col].max().reset_index()
        fig, ax = plt.subplots(figsize=(6, 4))
        for (sync, strat), g in worst.groupby(["synchronizer", "strategy"]):
            ax.plot(g["n"], g[col], marker="o", label=f"{sync} / {strat}")
        ax.set_xlabel("n")
        ax.set_ylabel(label)
        ax.legend(fontsize="small")
        fig.tight_layout()
        path = args.out / f"{col}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        print(path)


if __name__ == "__main__":
    main()
