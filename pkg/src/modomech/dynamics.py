"""Joint mean-field and covariance dynamics.

The classical cavity/oscillator means obey nonlinear Langevin equations
without noise; Gaussian fluctuations around them obey a linear
time-dependent drift with constant diffusion, so their covariance follows a
Lyapunov differential equation. Both are integrated together as one
27-component first-order system (6 means + 21 unique covariance entries);
keeping only the upper triangle makes the covariance exactly symmetric at
every accepted step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .params import (
    SystemParams,
    drive_amplitude,
    initial_covariance,
    mechanical_coupling,
    noise_matrix,
    thermal_occupancy,
)

SQRT2 = math.sqrt(2.0)

#: default hard cap on the step size, in fractions of the modulation period
MAX_STEP_FRACTION = 1.0 / 200.0


def classical_rhs(t: float, state: np.ndarray, params: SystemParams) -> np.ndarray:
    """Time derivative of the classical means ``(q1, p1, q2, p2, re<a>, im<a>)``.

    Reference (non-hot-path) implementation; the integration kernels fuse
    the same expressions.
    """
    q1, p1, q2, p2, ar, ai = state
    lam = mechanical_coupling(t, params)
    drive = drive_amplitude(t, params)
    photon = ar * ar + ai * ai
    detuning = params.delta0 + params.g * (q1 + q2)
    return np.array(
        [
            params.omega_m * p1,
            -params.omega_m * q1 - params.g * photon - lam * q2 - params.gamma_m * p1,
            params.omega_m * p2,
            -params.omega_m * q2 - params.g * photon - lam * q1 - params.gamma_m * p2,
            -params.kappa * ar + detuning * ai + drive,
            -detuning * ar - params.kappa * ai,
        ]
    )


def drift_matrix(t: float, state: np.ndarray, params: SystemParams) -> np.ndarray:
    """Linearized drift of the fluctuations around the given classical state.

    The effective light-mechanics coupling is ``-sqrt(2)*g*<a>``; its real
    and imaginary parts enter the momentum rows, and the instantaneous
    detuning includes the static mechanical displacement of both
    oscillators.
    """
    q1, _, q2, _, ar, ai = state
    lam = mechanical_coupling(t, params)
    detuning = params.delta0 + params.g * (q1 + q2)
    gx = -SQRT2 * params.g * ar
    gy = -SQRT2 * params.g * ai

    a = np.zeros((6, 6))
    a[0, 1] = params.omega_m
    a[1, 0] = -params.omega_m
    a[1, 1] = -params.gamma_m
    a[1, 2] = -lam
    a[1, 4] = gx
    a[1, 5] = gy
    a[2, 3] = params.omega_m
    a[3, 0] = -lam
    a[3, 2] = -params.omega_m
    a[3, 3] = -params.gamma_m
    a[3, 4] = gx
    a[3, 5] = gy
    a[4, 0] = -gy
    a[4, 2] = -gy
    a[4, 4] = -params.kappa
    a[4, 5] = detuning
    a[5, 0] = gx
    a[5, 2] = gx
    a[5, 4] = -detuning
    a[5, 5] = -params.kappa
    return a


def covariance_rhs(cov: np.ndarray, drift: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Lyapunov derivative ``A V + V A^T + D``."""
    m = drift @ cov
    return m + m.T + noise


class IntegrationError(RuntimeError):
    """Integrator failure (step underflow or non-finite state).

    Distinct from divergence: covariance blow-up past the threshold is a
    physical outcome reported on the trajectory record, not an error.
    """

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t={time:.6g}")
        self.time = time


@dataclass
class IntegratorOptions:
    """Knobs for the embedded adaptive Dormand-Prince 5(4) integration."""

    rtol: float = 1e-8
    atol: float = 1e-10
    #: hard step cap; None means modulation_period * MAX_STEP_FRACTION
    max_step: float | None = None
    first_step: float | None = None
    min_step: float = 1e-12
    #: covariance magnitude/trace beyond which the trajectory counts as diverged
    divergence_threshold: float = 1e12
    samples_per_period: int = 200
    #: store a full state snapshot every this many samples (0 disables)
    snapshot_every: int = 0
    #: constant step size; disables adaptivity (used by the order test)
    fixed_step: float | None = None
    initial_classical: np.ndarray | None = None
    initial_covariance: np.ndarray | None = None

    def replace(self, **changes) -> "IntegratorOptions":
        return replace(self, **changes)


@dataclass
class TrajectoryRecord:
    """Sampled output of one trajectory integration.

    ``times`` is the uniform sample grid actually covered (truncated at the
    divergence point when the run blew up). ``log_negativity`` holds the
    mechanical-pair entanglement per sample and ``minus_mode_max_eig`` the
    largest eigenvalue of the difference-mode 2x2 covariance, both cheap
    by-products of the integration. A metric sample that cannot be resolved
    in double precision (possible deep inside a blow-up) is stored as NaN.
    """

    params: SystemParams
    options: IntegratorOptions
    times: np.ndarray
    log_negativity: np.ndarray
    minus_mode_max_eig: np.ndarray
    diverged: bool
    divergence_time: float | None
    final_time: float
    final_classical: np.ndarray
    final_covariance: np.ndarray
    snapshot_times: np.ndarray
    snapshot_classical: np.ndarray
    snapshot_covariances: np.ndarray
    n_accepted: int
    n_rejected: int
    backend: str

    @property
    def modulation_period(self) -> float:
        return self.params.modulation_period

    def entanglement_death_time(self) -> float | None:
        """Start of the trailing window where the entanglement stays zero.

        Returns None when the trajectory never entangles, is still entangled
        at its last sample, or the sample after the last entangled one is a
        NaN (metric unresolvable) rather than a computed zero.
        """
        en = self.log_negativity
        if en.size == 0 or en[-1] > 0.0 or not np.any(en > 0.0):
            return None
        last_positive = int(np.nonzero(en > 0.0)[0][-1])
        if math.isnan(en[last_positive + 1]):
            return None
        return float(self.times[last_positive + 1])


def _build_sample_grid(t_end: float, sample_dt: float) -> np.ndarray:
    if t_end < 0.0:
        raise ValueError(f"t_end must be non-negative, got {t_end!r}")
    n_full = int(math.floor(t_end / sample_dt + 1e-9))
    ts = sample_dt * np.arange(n_full + 1, dtype=np.float64)
    if t_end - ts[-1] > 1e-9 * sample_dt:
        ts = np.append(ts, t_end)
    return ts


def integrate(
    params: SystemParams,
    t_end: float,
    options: IntegratorOptions | None = None,
) -> TrajectoryRecord:
    """Integrate means and covariance from the standard start state to t_end.

    The start state is zero classical means with a thermal-mechanics /
    vacuum-cavity covariance unless overridden through the options. Samples
    are taken on a uniform grid of ``samples_per_period`` points per
    modulation period (plus one final point if ``t_end`` is off-grid).

    Covariance blow-up beyond ``divergence_threshold`` stops the run cleanly
    and marks the record as diverged; step underflow or non-finite state
    raises ``IntegrationError``.
    """
    opts = options or IntegratorOptions()
    if opts.samples_per_period < 1:
        raise ValueError("samples_per_period must be >= 1")

    tau = params.modulation_period
    sample_dt = tau / opts.samples_per_period
    ts = _build_sample_grid(t_end, sample_dt)
    n_samples = ts.shape[0]

    n_th = thermal_occupancy(params.temp_ratio)
    y = np.empty(_kernels.N_STATE)
    if opts.initial_classical is None:
        y[:6] = 0.0
    else:
        init_c = np.asarray(opts.initial_classical, dtype=np.float64)
        if init_c.shape != (6,):
            raise ValueError("initial_classical must have shape (6,)")
        y[:6] = init_c
    if opts.initial_covariance is None:
        cov0 = initial_covariance(n_th)
    else:
        cov0 = np.asarray(opts.initial_covariance, dtype=np.float64)
        if cov0.shape != (6, 6):
            raise ValueError("initial_covariance must have shape (6, 6)")
        if not np.allclose(cov0, cov0.T, atol=1e-12):
            raise ValueError("initial_covariance must be symmetric")
    y[6:] = _kernels.pack_covariance(cov0)

    h_max = opts.max_step if opts.max_step is not None else tau * MAX_STEP_FRACTION
    h_init = opts.first_step if opts.first_step is not None else 0.25 * min(h_max, sample_dt)
    if opts.fixed_step is not None and opts.fixed_step <= 0.0:
        raise ValueError("fixed_step must be positive when given")
    fixed_h = opts.fixed_step if opts.fixed_step is not None else 0.0

    en_out = np.empty(n_samples)
    eig_out = np.empty(n_samples)
    if opts.snapshot_every > 0:
        n_snap_max = (n_samples - 1) // opts.snapshot_every + 1
    else:
        n_snap_max = 0
    snap_t = np.empty(max(n_snap_max, 1))
    snap_y = np.empty((max(n_snap_max, 1), _kernels.N_STATE))

    P = _kernels.pack_params(params, n_th)
    status, stop_time, n_filled, n_snap, n_acc, n_rej = _kernels.run_loop(
        _kernels.BACKEND,
        P,
        y,
        ts,
        opts.rtol,
        opts.atol,
        h_max,
        h_init,
        opts.min_step,
        opts.divergence_threshold,
        fixed_h,
        opts.snapshot_every,
        en_out,
        eig_out,
        snap_t,
        snap_y,
    )

    if status == _kernels.STATUS_STEP_UNDERFLOW:
        raise IntegrationError("step size underflow", stop_time)
    if status == _kernels.STATUS_NAN:
        raise IntegrationError("non-finite state encountered", stop_time)

    diverged = status == _kernels.STATUS_DIVERGED
    return TrajectoryRecord(
        params=params,
        options=opts,
        times=ts[:n_filled].copy(),
        log_negativity=en_out[:n_filled].copy(),
        minus_mode_max_eig=eig_out[:n_filled].copy(),
        diverged=diverged,
        divergence_time=stop_time if diverged else None,
        final_time=stop_time,
        final_classical=y[:6].copy(),
        final_covariance=_kernels.unpack_covariance(y[6:]),
        snapshot_times=snap_t[:n_snap].copy(),
        snapshot_classical=snap_y[:n_snap, :6].copy(),
        snapshot_covariances=np.array(
            [_kernels.unpack_covariance(row) for row in snap_y[:n_snap, 6:]]
        ).reshape(n_snap, 6, 6),
        n_accepted=n_acc,
        n_rejected=n_rej,
        backend=_kernels.BACKEND,
    )
