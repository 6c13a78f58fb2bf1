"""Phase-space density heat maps, one panel per mode in the file.

Usage: python3 plot_wigner.py IN_CSV OUT_IMG
"""

import argparse

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from csvkit import fail, floats, load_columns

METADATA = {"Software": "modomech-figures"}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("input", help="wigner CSV")
    ap.add_argument("output", help="image file to write")
    args = ap.parse_args()

    table = load_columns(args.input, ["mode", "q", "p", "wigner"])
    modes = list(dict.fromkeys(table["mode"]))
    qs = floats(table["q"])
    ps = floats(table["p"])
    ws = floats(table["wigner"])

    if not modes:
        fig, ax = plt.subplots(figsize=(4.0, 3.6))
        ax.set_xlabel("q")
        ax.set_ylabel("p")
        fig.tight_layout()
        fig.savefig(args.output, dpi=150, metadata=METADATA)
        return 0

    fields = {}
    for mode in modes:
        sel = [i for i, m in enumerate(table["mode"]) if m == mode]
        q_axis = np.unique([qs[i] for i in sel])
        p_axis = np.unique([ps[i] for i in sel])
        grid = np.full((q_axis.size, p_axis.size), np.nan)
        qi = {v: k for k, v in enumerate(q_axis)}
        pi = {v: k for k, v in enumerate(p_axis)}
        for i in sel:
            grid[qi[qs[i]], pi[ps[i]]] = ws[i]
        if np.isnan(grid).any():
            fail(f"{args.input}: mode {mode!r} does not cover a full q/p grid")
        fields[mode] = (q_axis, p_axis, grid)

    v_max = max(float(grid.max()) for _, _, grid in fields.values())
    fig, axes = plt.subplots(
        1, len(modes), figsize=(4.0 * len(modes), 3.6), squeeze=False
    )
    for ax, mode in zip(axes[0], modes):
        q_axis, p_axis, grid = fields[mode]
        mesh = ax.pcolormesh(
            q_axis, p_axis, grid.T, shading="auto", vmin=0.0, vmax=v_max
        )
        ax.set_title(mode)
        ax.set_xlabel("q")
        ax.set_ylabel("p")
        ax.set_aspect("equal")
    fig.colorbar(mesh, ax=axes[0], shrink=0.85, label="W")
    fig.savefig(args.output, dpi=150, metadata=METADATA)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
