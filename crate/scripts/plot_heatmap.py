#!/usr/bin/env python3
"""Plot heatmap.csv from `lrqaoa scan` as a slope-plane image."""
import argparse

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("png")
    ap.add_argument("--column", default="prob")
    args = ap.parse_args()

    df = pd.read_csv(args.csv)
    table = df.pivot(index="delta_gamma", columns="delta_beta", values=args.column)
    betas, gammas = table.columns.to_numpy(), table.index.to_numpy()
    fig, ax = plt.subplots(figsize=(5, 4))
    mesh = ax.pcolormesh(betas, gammas, table.to_numpy(), shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=args.column)
    ax.set_xlabel(r"$\Delta\beta$")
    ax.set_ylabel(r"$\Delta\gamma$")
    fig.tight_layout()
    fig.savefig(args.png, dpi=150)


if __name__ == "__main__":
    main()
