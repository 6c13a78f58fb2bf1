"""Timing comparison between the numba and pure-numpy integrator backends.

Each backend runs in its own subprocess because the backend is chosen at
import time from ``MODOMECH_DISABLE_NUMBA``. The parent checks that both
produce the same entanglement series before reporting timings.

Usage: python3 benchmarks/bench_kernels.py [--periods N] [--repeats K]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from modomech import SystemParams, IntegratorOptions, integrate
from modomech._kernels import BACKEND

periods, repeats = float(sys.argv[1]), int(sys.argv[2])
p = SystemParams(lambda0=0.005)
t_end = periods * p.modulation_period

rec = integrate(p, t_end, IntegratorOptions())  # warm-up compiles the kernels
times = []
for _ in range(repeats):
    t0 = time.perf_counter()
    rec = integrate(p, t_end, IntegratorOptions())
    times.append(time.perf_counter() - t0)
best = min(times)
json.dump(
    {
        "backend": BACKEND,
        "best_s": best,
        "n_accepted": rec.n_accepted,
        "log_negativity": rec.log_negativity.tolist(),
    },
    sys.stdout,
)
"""


def run_backend(disable_numba: bool, periods: float, repeats: int) -> dict:
    env = dict(os.environ)
    env["MODOMECH_DISABLE_NUMBA"] = "1" if disable_numba else "0"
    out = subprocess.run(
        [sys.executable, "-c", WORKER, str(periods), str(repeats)],
        env=env,
        check=True,
        capture_output=True,
        text=True,
    )
    return json.loads(out.stdout)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--periods", type=float, default=200.0)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    fast = run_backend(False, args.periods, args.repeats)
    slow = run_backend(True, args.periods, args.repeats)
    if fast["backend"] == slow["backend"]:
        print("numba unavailable; both runs used the numpy path", file=sys.stderr)

    en_fast = fast["log_negativity"]
    en_slow = slow["log_negativity"]
    gap = max(abs(a - b) for a, b in zip(en_fast, en_slow))
    assert len(en_fast) == len(en_slow)

    print(f"workload: lambda0=0.005, {args.periods:g} modulation periods, best of {args.repeats}")
    for res in (fast, slow):
        rate = args.periods / res["best_s"]
        print(
            f"  {res['backend']:>5s}: {res['best_s']:8.3f} s "
            f"({rate:8.1f} periods/s, {res['n_accepted']} accepted steps)"
        )
    print(f"speedup: {slow['best_s'] / fast['best_s']:.1f}x")
    print(f"max |delta E_N| between backends: {gap:.3e}")
    return 0 if gap < 1e-9 else 1


if __name__ == "__main__":
    sys.exit(main())
