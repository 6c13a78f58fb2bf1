"""Stability chart: stable region white, unstable grey, optional markers.

Usage: python3 plot_stability.py CHART_CSV OUT_IMG [--markers MARKERS_CSV]
"""

import argparse

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from csvkit import fail, floats, load_columns

METADATA = {"Software": "modomech-figures"}
SHADE = {"stable": 0.0, "boundary": 0.35, "unstable": 0.75}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("input", help="stability grid CSV")
    ap.add_argument("output", help="image file to write")
    ap.add_argument("--markers", default=None, help="marker CSV from the same run")
    args = ap.parse_args()

    table = load_columns(args.input, ["epsilon", "delta", "classification"])
    eps = floats(table["epsilon"])
    del_ = floats(table["delta"])
    cls = table["classification"]
    unknown = sorted(set(cls) - set(SHADE))
    if unknown:
        fail(f"{args.input}: unknown classification value(s): {', '.join(unknown)}")

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    if cls:
        e_axis = np.unique(eps)
        d_axis = np.unique(del_)
        grid = np.full((e_axis.size, d_axis.size), np.nan)
        ei = {v: k for k, v in enumerate(e_axis)}
        di = {v: k for k, v in enumerate(d_axis)}
        for e, d, c in zip(eps, del_, cls):
            grid[ei[e], di[d]] = SHADE[c]
        ax.pcolormesh(
            d_axis, e_axis, grid, shading="auto", cmap="Greys", vmin=0.0, vmax=1.0
        )

    if args.markers:
        marks = load_columns(args.markers, ["lambda0", "epsilon", "delta"])
        ax.plot(
            floats(marks["delta"]),
            floats(marks["epsilon"]),
            "o",
            color="tab:red",
            ms=5,
        )
        for lam, e, d in zip(
            marks["lambda0"], floats(marks["epsilon"]), floats(marks["delta"])
        ):
            ax.annotate(
                rf"$\lambda_0={lam}$",
                (d, e),
                textcoords="offset points",
                xytext=(6, 2),
                fontsize=8,
            )

    ax.set_xlabel(r"$\delta$")
    ax.set_ylabel(r"$\epsilon$")
    fig.tight_layout()
    fig.savefig(args.output, dpi=150, metadata=METADATA)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
