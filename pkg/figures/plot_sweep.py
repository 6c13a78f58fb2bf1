"""Stationary entanglement against a swept parameter.

The first CSV column names the parameter. Settled points draw as a marked
line; points without a stationary value (diverged, not settled, failed)
show as crosses on the zero line.

Usage: python3 plot_sweep.py IN_CSV OUT_IMG [--x-label TEXT]
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from csvkit import floats, load_columns

METADATA = {"Software": "modomech-figures"}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("input", help="sweep CSV")
    ap.add_argument("output", help="image file to write")
    ap.add_argument("--x-label", default=None)
    args = ap.parse_args()

    table = load_columns(args.input, ["status", "log_negativity"])
    parameter = next(iter(table))
    xs = floats(table[parameter])
    ens = floats(table["log_negativity"])
    status = table["status"]

    settled = [(x, en) for x, en, s in zip(xs, ens, status) if s == "ok"]
    unsettled = [x for x, s in zip(xs, status) if s != "ok"]

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if settled:
        ax.plot(*zip(*settled), "o-", ms=4, lw=1.0)
    if unsettled:
        ax.plot(
            unsettled,
            [0.0] * len(unsettled),
            "x",
            color="tab:red",
            ms=6,
            label="no stationary value",
        )
        ax.legend(fontsize=8)
    ax.set_xlabel(args.x_label if args.x_label is not None else parameter)
    ax.set_ylabel(r"$E_N$")
    ax.set_ylim(bottom=0.0)

    fig.tight_layout()
    fig.savefig(args.output, dpi=150, metadata=METADATA)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
