import subprocess
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
SCRIPTS = {
    name: ROOT / f"plot_{name}.py"
    for name in ("timeseries", "sweep", "wigner", "stability")
}


def render(script, *args):
    return subprocess.run(
        [sys.executable, str(SCRIPTS[script]), *map(str, args)],
        capture_output=True,
        text=True,
    )


def _cli(args, cwd):
    subprocess.run(
        [sys.executable, "-m", "modomech.cli", *args],
        check=True,
        cwd=cwd,
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory):
    """Small CSV set produced by the simulator CLI, shared by all tests."""
    d = tmp_path_factory.mktemp("csv")
    _cli(
        [
            "timeseries",
            "--t-end-periods",
            "80",
            "--lambda0-list",
            "0,0.005",
            "--out",
            str(d / "ts.csv"),
        ],
        d,
    )
    _cli(
        [
            "temp-sweep",
            "--values",
            "0,0.05,0.1",
            "--settle-rel-tol",
            "0.5",
            "--settle-min-time",
            "5",
            "--settle-extra-periods",
            "10",
            "--out",
            str(d / "temp.csv"),
        ],
        d,
    )
    _cli(
        ["wigner", "--periods", "1", "--grid-n", "21", "--out", str(d / "wigner.csv")],
        d,
    )
    _cli(
        [
            "stability-chart",
            "--n-epsilon",
            "9",
            "--n-delta",
            "13",
            "--out",
            str(d / "chart.csv"),
        ],
        d,
    )
    return d
