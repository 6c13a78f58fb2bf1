"""Command-line front end.

Every data-producing command writes a CSV (deterministic bytes for a given
configuration and backend) plus a JSON manifest describing the resolved
parameters, integrator options, and outputs. Wall-clock duration lives only
in the manifest so the CSVs stay byte-reproducible.

Exit codes: 0 on success (including sweeps containing diverged points),
2 on configuration errors, 3 on hard integration failures.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import enum
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .analysis import (
    ANALYSIS_DIVERGENCE_THRESHOLD,
    PointStatus,
    SettleCriterion,
    SweepSpec,
    death_point,
    run_sweep,
)
from .dynamics import IntegrationError, IntegratorOptions, integrate
from .gaussian import (
    MODE_CAVITY,
    MODE_MINUS,
    MODE_PLUS,
    TrajectoryDivergedError,
    single_mode_reduce,
    wigner_field,
)
from .mathieu import (
    classify_stability,
    critical_coupling,
    floquet_classify,
    floquet_critical_coupling,
    reduced_coordinates,
    stability_grid,
)
from .params import PARAM_NAMES, ConfigError, params_from_config

DEFAULT_TIMESERIES_PERIODS = 400.0
DEFAULT_WIGNER_PERIODS = 100.0
DEFAULT_TEMP_RANGE = (0.0, 1.2, 10)
DEFAULT_FREQ_RANGE = (1.99, 2.01, 21)
DEFAULT_LAMBDA_RANGE = (0.0, 0.01, 11)
DEFAULT_CHART_MARKERS = "0.005,0.006,0.007"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path: Path, command: str, columns: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# modomech {__version__} {command}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, enum.Enum):
        return _json_safe(obj.value)
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def _manifest_path(out: Path, explicit: str | None) -> Path:
    return Path(explicit) if explicit else out.with_suffix(".manifest.json")


def _write_manifest(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_json_safe(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest(
    command: str,
    params,
    outputs: list[Path],
    duration_s: float,
    *,
    options: IntegratorOptions | None = None,
    settle: SettleCriterion | None = None,
    seed: int | None = None,
    extras: dict | None = None,
) -> dict:
    payload = {
        "tool": "modomech",
        "version": __version__,
        "command": command,
        "kernel_backend": BACKEND,
        "params": params.as_dict(),
        "outputs": [str(p) for p in outputs],
        "seed": seed,
        "duration_s": duration_s,
    }
    if options is not None:
        payload["options"] = dataclasses.asdict(options)
    if settle is not None:
        payload["settle"] = dataclasses.asdict(settle)
    if extras:
        payload.update(extras)
    return payload


def _resolve_params(args):
    overrides = {
        name: getattr(args, name)
        for name in PARAM_NAMES
        if getattr(args, name) is not None
    }
    try:
        return params_from_config(args.config, overrides)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc


def _integrator_options(
    args, default_divergence: float | None = None
) -> IntegratorOptions:
    kwargs = {}
    if args.rtol is not None:
        kwargs["rtol"] = args.rtol
    if args.atol is not None:
        kwargs["atol"] = args.atol
    if args.max_step is not None:
        kwargs["max_step"] = args.max_step
    if args.divergence_threshold is not None:
        kwargs["divergence_threshold"] = args.divergence_threshold
    elif default_divergence is not None:
        kwargs["divergence_threshold"] = default_divergence
    if args.samples_per_period is not None:
        kwargs["samples_per_period"] = args.samples_per_period
    return IntegratorOptions(**kwargs)


def _settle_criterion(args) -> SettleCriterion:
    kwargs = {}
    if args.settle_rel_tol is not None:
        kwargs["rel_tol"] = args.settle_rel_tol
    if args.settle_min_time is not None:
        kwargs["min_time"] = args.settle_min_time
    if args.settle_extra_periods is not None:
        kwargs["extra_periods"] = args.settle_extra_periods
    return SettleCriterion(**kwargs)


def _out_path(args) -> Path:
    return Path(args.out) if args.out else Path(args.default_out)


def _parse_float_list(text: str, flag: str) -> tuple[float, ...]:
    try:
        values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"{flag} expects comma-separated numbers: {exc}") from exc
    if not values:
        raise ConfigError(f"{flag} is empty")
    return values


def _sweep_values(args) -> tuple[float, ...]:
    if args.values:
        return _parse_float_list(args.values, "--values")
    lo, hi, pts = args.sweep_range
    if args.min is not None:
        lo = args.min
    if args.max is not None:
        hi = args.max
    if args.points is not None:
        pts = args.points
    if pts < 2:
        raise ConfigError("--points must be at least 2")
    return tuple(float(v) for v in np.linspace(lo, hi, pts))


def cmd_timeseries(args) -> int:
    params = _resolve_params(args)
    options = _integrator_options(args)
    tau = params.modulation_period
    t_end = args.t_end if args.t_end is not None else args.t_end_periods * tau
    if args.lambda0_list:
        lams = _parse_float_list(args.lambda0_list, "--lambda0-list")
    else:
        lams = (params.lambda0,)

    started = time.perf_counter()
    rows = []
    runs = []
    for lam in lams:
        record = integrate(params.replace(lambda0=lam), t_end, options)
        for t, en, eig in zip(
            record.times, record.log_negativity, record.minus_mode_max_eig
        ):
            rows.append((lam, t, t / tau, en, eig))
        runs.append(
            {
                "lambda0": lam,
                "diverged": record.diverged,
                "divergence_time": record.divergence_time,
                "final_time": record.final_time,
                "n_accepted": record.n_accepted,
                "n_rejected": record.n_rejected,
            }
        )
    duration = time.perf_counter() - started

    out = _out_path(args)
    _write_csv(
        out,
        "timeseries",
        ["lambda0", "time", "periods", "log_negativity", "minus_mode_max_eig"],
        rows,
    )
    _write_manifest(
        _manifest_path(out, args.manifest),
        _manifest(
            "timeseries",
            params,
            [out],
            duration,
            options=options,
            seed=args.seed,
            extras={"t_end": t_end, "lambda0_values": list(lams), "runs": runs},
        ),
    )
    return 0


def cmd_sweep(args) -> int:
    base = _resolve_params(args)
    values = _sweep_values(args)
    settle = _settle_criterion(args)
    options = _integrator_options(
        args, default_divergence=ANALYSIS_DIVERGENCE_THRESHOLD
    )
    spec = SweepSpec(
        parameter=args.sweep_parameter,
        values=values,
        base=base,
        settle=settle,
        options=options,
    )

    started = time.perf_counter()
    result = run_sweep(spec, workers=args.workers)
    duration = time.perf_counter() - started

    out = _out_path(args)
    _write_csv(
        out,
        args.command,
        [args.sweep_parameter, "status", "log_negativity", "settle_time", "divergence_time"],
        [
            (p.value, p.status, p.log_negativity, p.settle_time, p.divergence_time)
            for p in result.points
        ],
    )

    ok = [p for p in result.points if p.status is PointStatus.OK]
    extras: dict = {
        "sweep_parameter": args.sweep_parameter,
        "n_points": len(result.points),
        "n_ok": len(ok),
        "n_diverged": sum(p.status is PointStatus.DIVERGED for p in result.points),
    }
    if args.command == "temp-sweep":
        if ok:
            xs = np.array([p.value for p in ok])
            ens = np.array([p.log_negativity for p in ok])
            extras["death_temp_ratio"] = death_point(xs, ens)
    elif args.command == "freq-sweep":
        if ok:
            best = max(ok, key=lambda p: p.log_negativity)
            extras["peak_omega_mod"] = best.value
            extras["peak_log_negativity"] = best.log_negativity
    elif args.command == "lambda-sweep":
        extras["first_order_critical_lambda0"] = critical_coupling(base)
        try:
            extras["floquet_critical_lambda0"] = floquet_critical_coupling(base)
        except ValueError:
            extras["floquet_critical_lambda0"] = None

    _write_manifest(
        _manifest_path(out, args.manifest),
        _manifest(
            args.command,
            base,
            [out],
            duration,
            options=options,
            settle=settle,
            seed=args.seed,
            extras=extras,
        ),
    )
    return 0


def cmd_wigner(args) -> int:
    params = _resolve_params(args)
    options = _integrator_options(args)
    tau = params.modulation_period
    t_end = args.time if args.time is not None else args.periods * tau
    modes = (
        [MODE_PLUS, MODE_MINUS] if args.mode == "both" else [args.mode]
    )

    started = time.perf_counter()
    record = integrate(params, t_end, options)
    if record.diverged and record.final_time < t_end:
        raise TrajectoryDivergedError(t_end, record.divergence_time)

    rows = []
    mode_meta = {}
    for mode in modes:
        cm, mean = single_mode_reduce(
            record.final_covariance, mode, means=record.final_classical
        )
        field = wigner_field(
            cm, mean, grid_points=args.grid_n, span_sigmas=args.grid_sigmas
        )
        for i, qv in enumerate(field.q):
            for j, pv in enumerate(field.p):
                rows.append((mode, qv, pv, field.w[i, j]))
        mode_meta[mode] = {
            "covariance": cm,
            "mean": mean,
            "normalization": field.normalization(),
            "peak": float(field.w.max()),
        }
    duration = time.perf_counter() - started

    out = _out_path(args)
    _write_csv(out, "wigner", ["mode", "q", "p", "wigner"], rows)
    _write_manifest(
        _manifest_path(out, args.manifest),
        _manifest(
            "wigner",
            params,
            [out],
            duration,
            options=options,
            seed=args.seed,
            extras={
                "time": record.final_time,
                "grid_points": args.grid_n,
                "span_sigmas": args.grid_sigmas,
                "modes": mode_meta,
            },
        ),
    )
    return 0


def cmd_stability_chart(args) -> int:
    params = _resolve_params(args)
    started = time.perf_counter()
    grid = stability_grid(
        epsilon_max=args.epsilon_max,
        delta_min=args.delta_min,
        delta_max=args.delta_max,
        n_epsilon=args.n_epsilon,
        n_delta=args.n_delta,
        order=args.order,
    )
    out = _out_path(args)
    _write_csv(
        out,
        "stability-chart",
        ["epsilon", "delta", "classification"],
        [(pt.epsilon, pt.delta, pt.classification) for pt in grid],
    )

    outputs = [out]
    markers_meta = []
    if args.markers:
        lams = _parse_float_list(args.markers, "--markers")
        cell = (
            0.5 * (args.delta_max - args.delta_min) / (args.n_delta - 1)
            if args.n_delta > 1
            else 1e-9
        )
        marker_rows = []
        for lam in lams:
            point = params.replace(lambda0=lam)
            delta, epsilon = reduced_coordinates(point)
            series = classify_stability(delta, epsilon, order=args.order, tol=cell)
            floquet = floquet_classify(point)
            marker_rows.append((lam, epsilon, delta, series, floquet))
            markers_meta.append(
                {
                    "lambda0": lam,
                    "epsilon": epsilon,
                    "delta": delta,
                    "series": series,
                    "floquet": floquet,
                }
            )
        markers_out = out.with_name(out.stem + "_markers" + out.suffix)
        _write_csv(
            markers_out,
            "stability-chart",
            ["lambda0", "epsilon", "delta", "series_classification", "floquet_classification"],
            marker_rows,
        )
        outputs.append(markers_out)
    duration = time.perf_counter() - started

    _write_manifest(
        _manifest_path(out, args.manifest),
        _manifest(
            "stability-chart",
            params,
            outputs,
            duration,
            seed=args.seed,
            extras={
                "grid": {
                    "epsilon_max": args.epsilon_max,
                    "delta_min": args.delta_min,
                    "delta_max": args.delta_max,
                    "n_epsilon": args.n_epsilon,
                    "n_delta": args.n_delta,
                    "order": args.order,
                },
                "markers": markers_meta,
            },
        ),
    )
    return 0


def cmd_critical(args) -> int:
    params = _resolve_params(args)
    started = time.perf_counter()
    first_order = critical_coupling(params)
    try:
        floquet = floquet_critical_coupling(params)
    except ValueError as exc:
        print(f"modomech: floquet bracket unavailable: {exc}", file=sys.stderr)
        floquet = None
    delta, epsilon = reduced_coordinates(params)
    classification = classify_stability(delta, epsilon)
    duration = time.perf_counter() - started

    print(f"first_order_critical_lambda0 = {_fmt(first_order)}")
    print(f"floquet_critical_lambda0 = {_fmt(floquet)}")
    if floquet:
        print(f"relative_gap = {_fmt((floquet - first_order) / floquet)}")
    print(f"delta = {_fmt(delta)}")
    print(f"epsilon = {_fmt(epsilon)}")
    print(f"classification = {classification.value}")

    if args.out:
        out = Path(args.out)
        _write_csv(
            out,
            "critical",
            [
                "first_order_critical_lambda0",
                "floquet_critical_lambda0",
                "delta",
                "epsilon",
                "classification",
            ],
            [(first_order, floquet, delta, epsilon, classification)],
        )
        _write_manifest(
            _manifest_path(out, args.manifest),
            _manifest("critical", params, [out], duration, seed=args.seed),
        )
    return 0


def _param_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("system parameters")
    group.add_argument("--config", metavar="PATH", help="key = value parameter file")
    for name in PARAM_NAMES:
        group.add_argument(
            "--" + name.replace("_", "-"),
            dest=name,
            type=float,
            default=None,
            metavar="X",
            help=f"override {name}",
        )
    return parent


def _integrator_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("integrator")
    group.add_argument("--rtol", type=float, default=None, metavar="X")
    group.add_argument("--atol", type=float, default=None, metavar="X")
    group.add_argument("--max-step", type=float, default=None, metavar="X")
    group.add_argument(
        "--divergence-threshold",
        type=float,
        default=None,
        metavar="X",
        help="covariance magnitude treated as runaway growth",
    )
    group.add_argument("--samples-per-period", type=int, default=None, metavar="N")
    return parent


def _settle_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("settling")
    group.add_argument("--settle-rel-tol", type=float, default=None, metavar="X")
    group.add_argument(
        "--settle-min-time",
        type=float,
        default=None,
        metavar="T",
        help="earliest time treated as stationary (default: 10 damping times)",
    )
    group.add_argument("--settle-extra-periods", type=int, default=None, metavar="N")
    return parent


def _output_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("output")
    group.add_argument("--out", metavar="PATH", help="output CSV path")
    group.add_argument(
        "--manifest", metavar="PATH", help="manifest path (default: <out>.manifest.json)"
    )
    group.add_argument(
        "--seed",
        type=int,
        default=None,
        metavar="N",
        help="recorded in the manifest; the solver itself is deterministic",
    )
    return parent


def _sweep_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("sweep grid")
    group.add_argument("--min", type=float, default=None, metavar="X")
    group.add_argument("--max", type=float, default=None, metavar="X")
    group.add_argument("--points", type=int, default=None, metavar="N")
    group.add_argument(
        "--values", metavar="LIST", help="explicit comma-separated grid (overrides min/max/points)"
    )
    group.add_argument("--workers", type=int, default=1, metavar="N")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modomech",
        description=(
            "Entanglement dynamics of two mechanically coupled oscillators "
            "in a modulated optical cavity"
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    params_p = _param_parent()
    integ_p = _integrator_parent()
    settle_p = _settle_parent()
    out_p = _output_parent()
    sweep_p = _sweep_parent()

    ts = sub.add_parser(
        "timeseries",
        parents=[params_p, integ_p, out_p],
        help="sampled entanglement along one or more trajectories",
    )
    ts.add_argument("--t-end", type=float, default=None, metavar="T")
    ts.add_argument(
        "--t-end-periods",
        type=float,
        default=DEFAULT_TIMESERIES_PERIODS,
        metavar="N",
        help=f"horizon in modulation periods (default {DEFAULT_TIMESERIES_PERIODS:g})",
    )
    ts.add_argument(
        "--lambda0-list",
        metavar="LIST",
        help="comma-separated coupling amplitudes, one trajectory each",
    )
    ts.set_defaults(func=cmd_timeseries, default_out="timeseries.csv")

    temp = sub.add_parser(
        "temp-sweep",
        parents=[params_p, integ_p, settle_p, out_p, sweep_p],
        help="stationary entanglement against bath temperature ratio",
    )
    temp.set_defaults(
        func=cmd_sweep,
        default_out="temp_sweep.csv",
        sweep_parameter="temp_ratio",
        sweep_range=DEFAULT_TEMP_RANGE,
    )

    freq = sub.add_parser(
        "freq-sweep",
        parents=[params_p, integ_p, settle_p, out_p, sweep_p],
        help="stationary entanglement against modulation frequency",
    )
    freq.set_defaults(
        func=cmd_sweep,
        default_out="freq_sweep.csv",
        sweep_parameter="omega_mod",
        sweep_range=DEFAULT_FREQ_RANGE,
    )

    lam = sub.add_parser(
        "lambda-sweep",
        parents=[params_p, integ_p, settle_p, out_p, sweep_p],
        help="stationary entanglement against mechanical coupling amplitude",
    )
    lam.set_defaults(
        func=cmd_sweep,
        default_out="lambda_sweep.csv",
        sweep_parameter="lambda0",
        sweep_range=DEFAULT_LAMBDA_RANGE,
    )

    wig = sub.add_parser(
        "wigner",
        parents=[params_p, integ_p, out_p],
        help="Wigner density of the sum and difference modes at a fixed time",
    )
    wig.add_argument(
        "--mode",
        choices=[MODE_PLUS, MODE_MINUS, MODE_CAVITY, "both"],
        default="both",
        help="normal mode to render (default: both mechanical modes)",
    )
    wig.add_argument("--time", type=float, default=None, metavar="T")
    wig.add_argument(
        "--periods",
        type=float,
        default=DEFAULT_WIGNER_PERIODS,
        metavar="N",
        help=f"snapshot time in modulation periods (default {DEFAULT_WIGNER_PERIODS:g})",
    )
    wig.add_argument("--grid-n", type=int, default=201, metavar="N")
    wig.add_argument("--grid-sigmas", type=float, default=6.0, metavar="X")
    wig.set_defaults(func=cmd_wigner, default_out="wigner.csv")

    chart = sub.add_parser(
        "stability-chart",
        parents=[params_p, out_p],
        help="parametric stability classification grid",
    )
    chart.add_argument("--epsilon-max", type=float, default=0.005, metavar="X")
    chart.add_argument("--delta-min", type=float, default=0.985, metavar="X")
    chart.add_argument("--delta-max", type=float, default=1.015, metavar="X")
    chart.add_argument("--n-epsilon", type=int, default=41, metavar="N")
    chart.add_argument("--n-delta", type=int, default=61, metavar="N")
    chart.add_argument(
        "--order", choices=["first", "third"], default="first", help="tongue-edge series order"
    )
    chart.add_argument(
        "--markers",
        default=DEFAULT_CHART_MARKERS,
        metavar="LIST",
        help="coupling amplitudes marked on the chart ('' disables)",
    )
    chart.set_defaults(func=cmd_stability_chart, default_out="stability_chart.csv")

    crit = sub.add_parser(
        "critical",
        parents=[params_p, out_p],
        help="critical coupling amplitude from series and Floquet analyses",
    )
    crit.set_defaults(func=cmd_critical, default_out="critical.csv")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"modomech: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, TrajectoryDivergedError) as exc:
        print(f"modomech: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
