"""Entanglement time series, one line per coupling amplitude.

Long runs get a zoomed inset over the late-time window so the asymptotic
period-locked oscillation stays visible next to the transient.

Usage: python3 plot_timeseries.py IN_CSV OUT_IMG [--inset-periods N | --no-inset]
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from csvkit import floats, load_columns

METADATA = {"Software": "modomech-figures"}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("input", help="timeseries CSV")
    ap.add_argument("output", help="image file to write")
    ap.add_argument("--inset-periods", type=float, default=20.0)
    ap.add_argument("--no-inset", action="store_true")
    args = ap.parse_args()

    table = load_columns(args.input, ["lambda0", "periods", "log_negativity"])
    series: dict = {}
    for lam, t, en in zip(
        table["lambda0"], floats(table["periods"]), floats(table["log_negativity"])
    ):
        series.setdefault(lam, ([], []))
        series[lam][0].append(t)
        series[lam][1].append(en)

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for lam, (ts, ens) in series.items():
        ax.plot(ts, ens, lw=0.8, label=rf"$\lambda_0 = {lam}$")
    ax.set_xlabel(r"$t/\tau$")
    ax.set_ylabel(r"$E_N$")
    ax.set_ylim(bottom=0.0)

    if series:
        ax.legend(loc="upper left", fontsize=8)
        t_max = max(max(ts) for ts, _ in series.values())
        if not args.no_inset and t_max >= 3.0 * args.inset_periods:
            lo = t_max - args.inset_periods
            axin = ax.inset_axes([0.58, 0.58, 0.39, 0.37])
            for ts, ens in series.values():
                late = [(t, en) for t, en in zip(ts, ens) if t >= lo]
                if late:
                    axin.plot(*zip(*late), lw=0.8)
            axin.set_xlim(lo, t_max)
            axin.tick_params(labelsize=7)
            axin.set_title("late time", fontsize=7)

    fig.tight_layout()
    fig.savefig(args.output, dpi=150, metadata=METADATA)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
