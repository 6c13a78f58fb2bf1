"""Stationary-value extraction and parameter sweeps.

The modulated system settles into a periodic steady state whose
entanglement oscillates within each modulation period. The stationary
figure of merit used throughout is the per-period maximum of the
logarithmic negativity, taken once adjacent periods agree to a relative
tolerance after the mechanical damping time has passed.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import IntegrationError, IntegratorOptions, TrajectoryRecord, integrate
from .params import PARAM_NAMES, SystemParams

#: sweeps only need to detect runaway growth, not resolve it
ANALYSIS_DIVERGENCE_THRESHOLD = 1e6


class PointStatus(str, enum.Enum):
    OK = "ok"
    DIVERGED = "diverged"
    NOT_SETTLED = "not-settled"
    FAILED = "failed"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class SettleCriterion:
    """When to accept a per-period maximum as stationary.

    ``min_time = None`` defaults to ten mechanical damping times. The
    ``floor`` keeps the relative test meaningful when the value is zero.
    """

    rel_tol: float = 0.01
    min_time: float | None = None
    floor: float = 1e-12
    extra_periods: int = 24

    def resolved_min_time(self, params: SystemParams) -> float:
        if self.min_time is not None:
            return self.min_time
        return 10.0 / params.gamma_m


@dataclass(frozen=True)
class StationaryResult:
    status: PointStatus
    log_negativity: float
    settle_time: float | None
    divergence_time: float | None
    record: TrajectoryRecord | None = None


def period_maxima(record: TrajectoryRecord) -> np.ndarray:
    """Per-period maxima of the sampled logarithmic negativity.

    Period k spans sample indices [k*spp, (k+1)*spp] inclusive, so each
    window ends exactly on a period boundary. Windows containing only NaN
    samples yield NaN.
    """
    spp = record.options.samples_per_period
    en = record.log_negativity
    n_full = (len(en) - 1) // spp
    out = np.empty(n_full)
    for k in range(n_full):
        window = en[k * spp : (k + 1) * spp + 1]
        finite = window[np.isfinite(window)]
        out[k] = finite.max() if finite.size else math.nan
    return out


def stationary_log_negativity(
    record: TrajectoryRecord, settle: SettleCriterion | None = None
) -> StationaryResult:
    """Extract the settled per-period maximum from a trajectory."""
    settle = settle or SettleCriterion()
    if record.diverged:
        return StationaryResult(
            status=PointStatus.DIVERGED,
            log_negativity=math.nan,
            settle_time=None,
            divergence_time=record.divergence_time,
            record=record,
        )
    maxima = period_maxima(record)
    tau = record.modulation_period
    min_time = settle.resolved_min_time(record.params)
    for k in range(1, len(maxima)):
        t_end = (k + 1) * tau
        if t_end <= min_time:
            continue
        prev, curr = maxima[k - 1], maxima[k]
        if not (math.isfinite(prev) and math.isfinite(curr)):
            continue
        if abs(curr - prev) <= settle.rel_tol * max(abs(prev), settle.floor):
            return StationaryResult(
                status=PointStatus.OK,
                log_negativity=float(curr),
                settle_time=t_end,
                divergence_time=None,
                record=record,
            )
    return StationaryResult(
        status=PointStatus.NOT_SETTLED,
        log_negativity=math.nan,
        settle_time=None,
        divergence_time=None,
        record=record,
    )


def run_stationary(
    params: SystemParams,
    settle: SettleCriterion | None = None,
    options: IntegratorOptions | None = None,
) -> StationaryResult:
    """Integrate long enough to settle and extract the stationary value."""
    settle = settle or SettleCriterion()
    if options is None:
        options = IntegratorOptions(
            divergence_threshold=ANALYSIS_DIVERGENCE_THRESHOLD
        )
    tau = params.modulation_period
    n_periods = math.ceil(settle.resolved_min_time(params) / tau) + settle.extra_periods
    record = integrate(params, n_periods * tau, options)
    return stationary_log_negativity(record, settle)


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional scan of a system parameter."""

    parameter: str
    values: tuple[float, ...]
    base: SystemParams
    settle: SettleCriterion = field(default_factory=SettleCriterion)
    options: IntegratorOptions | None = None

    def __post_init__(self) -> None:
        if self.parameter not in PARAM_NAMES:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def point_params(self, value: float) -> SystemParams:
        return self.base.replace(**{self.parameter: value})


@dataclass(frozen=True)
class SweepPoint:
    value: float
    status: PointStatus
    log_negativity: float
    settle_time: float | None
    divergence_time: float | None


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    points: tuple[SweepPoint, ...]

    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    def log_negativities(self) -> np.ndarray:
        return np.array([p.log_negativity for p in self.points])


def _sweep_point(spec: SweepSpec, value: float) -> SweepPoint:
    try:
        result = run_stationary(
            spec.point_params(value), settle=spec.settle, options=spec.options
        )
    except (IntegrationError, ValueError) as exc:
        return SweepPoint(
            value=value,
            status=PointStatus.FAILED,
            log_negativity=math.nan,
            settle_time=None,
            divergence_time=getattr(exc, "time", None),
        )
    return SweepPoint(
        value=value,
        status=result.status,
        log_negativity=result.log_negativity,
        settle_time=result.settle_time,
        divergence_time=result.divergence_time,
    )


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Run every sweep point, in order, containing per-point failures.

    ``workers > 1`` fans the points out over processes; results keep the
    order of ``spec.values`` either way.
    """
    if workers <= 1:
        points = [_sweep_point(spec, v) for v in spec.values]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_point, spec, v) for v in spec.values]
            points = []
            for value, fut in zip(spec.values, futures):
                try:
                    points.append(fut.result())
                except Exception:
                    points.append(
                        SweepPoint(
                            value=value,
                            status=PointStatus.FAILED,
                            log_negativity=math.nan,
                            settle_time=None,
                            divergence_time=None,
                        )
                    )
    return SweepResult(spec=spec, points=tuple(points))


def death_point(
    xs: np.ndarray, ens: np.ndarray, floor: float = 1e-6
) -> float | None:
    """Estimate where a decaying entanglement curve reaches zero.

    Uses the slope of the last two live points extrapolated to the floor,
    clipped to the bracketing interval; falls back to the interval midpoint
    when only one live point precedes the dead region. Returns None when
    the curve never dies (or never lives) inside the scan.
    """
    xs = np.asarray(xs, dtype=float)
    ens = np.asarray(ens, dtype=float)
    if xs.shape != ens.shape or xs.ndim != 1:
        raise ValueError("xs and ens must be matching 1-d arrays")
    alive = np.flatnonzero(ens > floor)
    if alive.size == 0:
        return None
    i = int(alive[-1])
    if i == len(xs) - 1:
        return None
    lo, hi = xs[i], xs[i + 1]
    if i >= 1 and ens[i - 1] > ens[i]:
        slope = (ens[i - 1] - ens[i]) / (xs[i] - xs[i - 1])
        crossing = xs[i] + (ens[i] - floor) / slope
        return float(min(max(crossing, lo), hi))
    return float(0.5 * (lo + hi))
