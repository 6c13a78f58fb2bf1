import csv
import json
import math

import pytest

from modomech import SystemParams, __version__
from modomech.cli import main


def _read_csv(path):
    with open(path) as fh:
        comment = fh.readline().rstrip("\n")
        reader = csv.reader(fh)
        columns = next(reader)
        rows = list(reader)
    return comment, columns, rows


def _read_manifest(csv_path):
    with open(csv_path.with_suffix(".manifest.json")) as fh:
        return json.load(fh)


def test_help_lists_commands(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    for command in (
        "timeseries",
        "temp-sweep",
        "freq-sweep",
        "lambda-sweep",
        "wigner",
        "stability-chart",
        "critical",
    ):
        assert command in out


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_critical_reports_both_estimates(capsys):
    assert main(["critical"]) == 0
    out = capsys.readouterr().out
    values = {}
    for line in out.splitlines():
        key, _, val = line.partition(" = ")
        values[key] = val
    assert float(values["first_order_critical_lambda0"]) == pytest.approx(
        0.006004625, rel=1e-6
    )
    assert float(values["floquet_critical_lambda0"]) == pytest.approx(
        0.0060851729, rel=1e-4
    )
    assert values["classification"] == "stable"


def test_timeseries_csv_and_manifest(tmp_path):
    out = tmp_path / "ts.csv"
    assert main(["timeseries", "--t-end-periods", "2", "--out", str(out)]) == 0
    comment, columns, rows = _read_csv(out)
    assert comment == f"# modomech {__version__} timeseries"
    assert columns == ["lambda0", "time", "periods", "log_negativity", "minus_mode_max_eig"]
    assert len(rows) == 401  # 2 periods at 200 samples each, plus t=0
    assert float(rows[0][1]) == 0.0
    tau = SystemParams().modulation_period
    assert float(rows[-1][2]) == pytest.approx(2.0, abs=1e-9)
    assert float(rows[-1][1]) == pytest.approx(2 * tau, abs=1e-9)

    manifest = _read_manifest(out)
    assert manifest["tool"] == "modomech"
    assert manifest["version"] == __version__
    assert manifest["command"] == "timeseries"
    assert manifest["kernel_backend"] in ("numba", "numpy")
    assert manifest["params"]["lambda0"] == 0.005
    assert manifest["outputs"] == [str(out)]
    assert manifest["duration_s"] > 0.0
    assert manifest["options"]["samples_per_period"] == 200
    run = manifest["runs"][0]
    assert run["diverged"] is False
    assert run["divergence_time"] is None


def test_timeseries_multiple_couplings(tmp_path):
    out = tmp_path / "multi.csv"
    code = main(
        [
            "timeseries",
            "--t-end-periods",
            "1",
            "--lambda0-list",
            "0,0.005",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    _, _, rows = _read_csv(out)
    assert len(rows) == 2 * 201
    assert {row[0] for row in rows} == {"0.0", "0.005"}
    manifest = _read_manifest(out)
    assert manifest["lambda0_values"] == [0.0, 0.005]
    assert len(manifest["runs"]) == 2


def test_csv_bytes_are_reproducible(tmp_path):
    args = ["timeseries", "--t-end-periods", "1"]
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    assert main(args + ["--out", str(first)]) == 0
    assert main(args + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    # manifests may differ only in wall-clock duration
    m1 = _read_manifest(first)
    m2 = _read_manifest(second)
    m1.pop("duration_s")
    m2.pop("duration_s")
    m1["outputs"] = m2["outputs"] = None
    assert m1 == m2


def test_config_file_with_cli_override(tmp_path):
    cfg = tmp_path / "params.cfg"
    cfg.write_text("lambda0 = 0.002\ne1 = 500  # reduced drive\n")
    out = tmp_path / "crit.csv"
    code = main(
        ["critical", "--config", str(cfg), "--lambda0", "0.003", "--out", str(out)]
    )
    assert code == 0
    manifest = _read_manifest(out)
    assert manifest["params"]["lambda0"] == 0.003  # flag beats file
    assert manifest["params"]["e1"] == 500.0
    assert manifest["params"]["e0"] == 1e4
    _, columns, rows = _read_csv(out)
    assert columns[0] == "first_order_critical_lambda0"
    assert len(rows) == 1


def test_unknown_config_key_is_a_usage_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("coupling = 0.005\n")
    assert main(["critical", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "unknown key" in err
    assert "coupling" in err


def test_malformed_values_flag_is_a_usage_error(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = main(["lambda-sweep", "--values", "a,b", "--out", str(out)])
    assert code == 2
    assert "--values" in capsys.readouterr().err
    assert not out.exists()


def test_lambda_sweep_manifest_carries_critical_estimates(tmp_path):
    out = tmp_path / "lam.csv"
    code = main(
        [
            "lambda-sweep",
            "--values",
            "0,0.005",
            "--settle-rel-tol",
            "0.5",
            "--settle-min-time",
            "5",
            "--settle-extra-periods",
            "10",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    _, columns, rows = _read_csv(out)
    assert columns == ["lambda0", "status", "log_negativity", "settle_time", "divergence_time"]
    assert [row[0] for row in rows] == ["0.0", "0.005"]
    assert all(row[1] == "ok" for row in rows)
    manifest = _read_manifest(out)
    assert manifest["n_ok"] == 2
    assert manifest["settle"]["rel_tol"] == 0.5
    assert manifest["first_order_critical_lambda0"] == pytest.approx(0.006004625, rel=1e-6)
    assert manifest["floquet_critical_lambda0"] == pytest.approx(0.0060851729, rel=1e-4)


def test_temp_sweep_reports_death_estimate(tmp_path):
    out = tmp_path / "temp.csv"
    code = main(
        [
            "temp-sweep",
            "--values",
            "0,0.05",
            "--settle-rel-tol",
            "0.5",
            "--settle-min-time",
            "5",
            "--settle-extra-periods",
            "10",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    manifest = _read_manifest(out)
    assert manifest["sweep_parameter"] == "temp_ratio"
    assert manifest["n_points"] == 2
    # both points stay entangled, so no death crossing on this short grid
    assert manifest["death_temp_ratio"] is None


def test_wigner_grid_for_both_mechanical_modes(tmp_path):
    out = tmp_path / "wig.csv"
    code = main(
        ["wigner", "--periods", "2", "--grid-n", "21", "--out", str(out)]
    )
    assert code == 0
    _, columns, rows = _read_csv(out)
    assert columns == ["mode", "q", "p", "wigner"]
    assert len(rows) == 2 * 21 * 21
    assert {row[0] for row in rows} == {"plus", "minus"}
    manifest = _read_manifest(out)
    for mode in ("plus", "minus"):
        meta = manifest["modes"][mode]
        assert meta["normalization"] == pytest.approx(1.0, abs=1e-3)
        assert meta["peak"] > 0.0
    assert manifest["grid_points"] == 21


def test_wigner_single_mode_selection(tmp_path):
    out = tmp_path / "cav.csv"
    code = main(
        [
            "wigner",
            "--mode",
            "cavity",
            "--periods",
            "1",
            "--grid-n",
            "11",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    _, _, rows = _read_csv(out)
    assert len(rows) == 11 * 11
    assert {row[0] for row in rows} == {"cavity"}


def test_wigner_beyond_divergence_fails_cleanly(tmp_path, capsys):
    out = tmp_path / "never.csv"
    code = main(
        [
            "wigner",
            "--lambda0",
            "0.05",
            "--divergence-threshold",
            "50",
            "--periods",
            "100",
            "--out",
            str(out),
        ]
    )
    assert code == 3
    assert "modomech:" in capsys.readouterr().err
    assert not out.exists()


def test_stability_chart_with_markers(tmp_path):
    out = tmp_path / "chart.csv"
    assert main(["stability-chart", "--out", str(out)]) == 0
    _, columns, rows = _read_csv(out)
    assert columns == ["epsilon", "delta", "classification"]
    assert len(rows) == 41 * 61
    classes = {row[2] for row in rows}
    assert classes == {"stable", "boundary", "unstable"}

    markers = out.with_name("chart_markers.csv")
    _, mcols, mrows = _read_csv(markers)
    assert mcols == [
        "lambda0",
        "epsilon",
        "delta",
        "series_classification",
        "floquet_classification",
    ]
    by_lam = {row[0]: row for row in mrows}
    # grid-resolution tolerance puts the near-critical marker on the edge
    assert by_lam["0.005"][3] == "stable"
    assert by_lam["0.006"][3] == "boundary"
    assert by_lam["0.007"][3] == "unstable"
    assert by_lam["0.005"][4] == "stable"
    assert by_lam["0.007"][4] == "unstable"

    manifest = _read_manifest(out)
    assert [str(p) for p in manifest["outputs"]] == [str(out), str(markers)]
    assert len(manifest["markers"]) == 3


def test_stability_chart_markers_disabled(tmp_path):
    out = tmp_path / "plain.csv"
    code = main(
        [
            "stability-chart",
            "--markers",
            "",
            "--n-epsilon",
            "3",
            "--n-delta",
            "5",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    _, _, rows = _read_csv(out)
    assert len(rows) == 15
    assert not out.with_name("plain_markers.csv").exists()
    assert _read_manifest(out)["markers"] == []
