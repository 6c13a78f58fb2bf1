"""Parametric stability of the mechanical difference mode.

With scaled time ``t~ = omega_mod*t/2`` and the damping factored out, the
difference coordinate obeys the canonical Mathieu equation
``y'' + (delta - 2*epsilon*cos(2*t~)) y = 0`` with

    delta   = (4*omega_m**2 - gamma_m**2) / omega_mod**2
    epsilon = 2*omega_m*lambda0 / omega_mod**2

The first instability tongue sits around ``delta = 1``; its edges are given
by perturbative series here and by a Floquet monodromy oracle (independent
integrator) for validation. Damping shifts the physical instability
threshold: the undamped growth exponent must exceed the scaled damping rate
``gamma~/2 = gamma_m/omega_mod`` before the mode actually grows.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .params import SystemParams

#: beyond this epsilon the truncated tongue-edge series degrade
EPSILON_SERIES_LIMIT = 0.1
#: default half-width (in delta) of the boundary classification band
BOUNDARY_TOL = 1e-9


class Stability(enum.Enum):
    STABLE = "stable"
    BOUNDARY = "boundary"
    UNSTABLE = "unstable"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class MathieuPoint:
    """Reduced coordinates of a parameter set in the stability chart."""

    delta: float
    epsilon: float
    classification: Stability | None = None


def tongue_edges(epsilon: float, order: str = "first") -> tuple[float, float]:
    """Edges ``(alpha1, beta1)`` of the first instability tongue.

    ``order`` selects the truncation: "first" gives ``1 +- epsilon``,
    "third" adds the quadratic and cubic corrections.
    """
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon!r}")
    if epsilon > EPSILON_SERIES_LIMIT:
        warnings.warn(
            f"epsilon = {epsilon:.3g} exceeds the series trust region "
            f"({EPSILON_SERIES_LIMIT:g}); tongue edges are inaccurate",
            stacklevel=2,
        )
    if order == "first":
        return 1.0 + epsilon, 1.0 - epsilon
    if order == "third":
        e2 = epsilon * epsilon
        e3 = e2 * epsilon
        alpha = 1.0 + epsilon - e2 / 8.0 - e3 / 64.0
        beta = 1.0 - epsilon - e2 / 8.0 + e3 / 64.0
        return alpha, beta
    raise ValueError(f"order must be 'first' or 'third', got {order!r}")


def lowest_eigenvalue(epsilon: float) -> float:
    """Series for the lowest characteristic value (zeroth tongue floor)."""
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon!r}")
    e2 = epsilon * epsilon
    return -0.5 * e2 + 7.0 * e2 * e2 / 128.0


def reduced_coordinates(params: SystemParams) -> tuple[float, float]:
    delta = (4.0 * params.omega_m**2 - params.gamma_m**2) / params.omega_mod**2
    epsilon = 2.0 * params.omega_m * params.lambda0 / params.omega_mod**2
    return delta, epsilon


def classify_stability(
    delta: float,
    epsilon: float,
    order: str = "first",
    tol: float = BOUNDARY_TOL,
) -> Stability:
    """Classify a chart point against the truncated tongue edges.

    Points within ``tol`` (in delta) of either edge are boundary; strictly
    inside the tongue is unstable, outside is stable. With ``tol = 0`` the
    classification flips exactly at the edges.
    """
    alpha, beta = tongue_edges(epsilon, order=order)
    if abs(delta - alpha) <= tol or abs(delta - beta) <= tol:
        return Stability.BOUNDARY
    if beta < delta < alpha:
        return Stability.UNSTABLE
    return Stability.STABLE


def mathieu_params(
    params: SystemParams, order: str = "first", tol: float = BOUNDARY_TOL
) -> MathieuPoint:
    """Chart coordinates and classification for a parameter set."""
    delta, epsilon = reduced_coordinates(params)
    return MathieuPoint(
        delta=delta,
        epsilon=epsilon,
        classification=classify_stability(delta, epsilon, order=order, tol=tol),
    )


def critical_coupling(params: SystemParams) -> float:
    """First-order coupling amplitude at which the lower tongue edge is hit.

    Zero when the operating point cannot reach the tongue (modulation too
    slow for the mechanical frequency).
    """
    value = (
        params.omega_m
        * (params.omega_mod**2 - 4.0 * params.omega_m**2 + params.gamma_m**2)
        / (2.0 * params.omega_m**2)
    )
    return max(value, 0.0)


def floquet_monodromy(
    delta: float, epsilon: float, rtol: float = 1e-12, atol: float = 1e-14
) -> np.ndarray:
    """Monodromy matrix of the undamped Mathieu equation over one period.

    Integrated with an independent high-order scheme (DOP853) so it can
    serve as an oracle for both the series edges and the full simulator.
    """

    def rhs(t, y):
        return [y[1], -(delta - 2.0 * epsilon * math.cos(2.0 * t)) * y[0]]

    cols = []
    for ic in ([1.0, 0.0], [0.0, 1.0]):
        sol = solve_ivp(
            rhs, (0.0, math.pi), ic, method="DOP853", rtol=rtol, atol=atol
        )
        if not sol.success:  # pragma: no cover - defensive
            raise RuntimeError(f"monodromy integration failed: {sol.message}")
        cols.append(sol.y[:, -1])
    return np.array(cols).T


def floquet_growth_rate(params: SystemParams) -> float:
    """Net amplitude growth rate of the difference mode per unit time.

    Undamped Mathieu growth exponent minus the damping rate; positive means
    the physical mode is parametrically unstable.
    """
    delta, epsilon = reduced_coordinates(params)
    monodromy = floquet_monodromy(delta, epsilon)
    radius = float(np.max(np.abs(np.linalg.eigvals(monodromy))))
    mu_scaled = math.log(radius) / math.pi
    return mu_scaled * (params.omega_mod / 2.0) - params.gamma_m / 2.0


def floquet_classify(params: SystemParams, tol: float = 1e-9) -> Stability:
    """Monodromy-based stability of the damped difference mode.

    Unstable when the undamped monodromy spectral radius exceeds the
    damping threshold ``exp(gamma~ * pi / 2)`` by more than ``tol``
    (relative); within ``tol`` is boundary.
    """
    delta, epsilon = reduced_coordinates(params)
    monodromy = floquet_monodromy(delta, epsilon)
    radius = float(np.max(np.abs(np.linalg.eigvals(monodromy))))
    gamma_scaled = 2.0 * params.gamma_m / params.omega_mod
    threshold = math.exp(0.5 * gamma_scaled * math.pi)
    ratio = radius / threshold
    if abs(ratio - 1.0) <= tol:
        return Stability.BOUNDARY
    return Stability.UNSTABLE if ratio > 1.0 else Stability.STABLE


def floquet_critical_coupling(
    params: SystemParams, bracket: tuple[float, float] | None = None
) -> float:
    """Coupling amplitude where the damped Floquet growth rate crosses zero."""
    first_order = critical_coupling(params)
    if bracket is None:
        if first_order <= 0.0:
            raise ValueError(
                "no first-order tongue crossing at these parameters; "
                "provide an explicit bracket"
            )
        bracket = (0.5 * first_order, 2.0 * first_order)
    lo, hi = bracket

    def rate(lambda0: float) -> float:
        return floquet_growth_rate(params.replace(lambda0=lambda0))

    return float(brentq(rate, lo, hi, xtol=1e-12, rtol=8.9e-16))


@dataclass(frozen=True)
class ChartPoint:
    epsilon: float
    delta: float
    classification: Stability


def stability_grid(
    epsilon_max: float = 0.005,
    delta_min: float = 0.985,
    delta_max: float = 1.015,
    n_epsilon: int = 41,
    n_delta: int = 61,
    order: str = "first",
) -> list[ChartPoint]:
    """Rectangular classification grid for rendering the stability chart.

    Boundary tolerance is half a delta-cell so the edge shows up at the
    grid's own resolution.
    """
    eps_values = np.linspace(0.0, epsilon_max, n_epsilon)
    delta_values = np.linspace(delta_min, delta_max, n_delta)
    cell = 0.5 * (delta_values[1] - delta_values[0]) if n_delta > 1 else BOUNDARY_TOL
    out = []
    for eps in eps_values:
        for delta in delta_values:
            out.append(
                ChartPoint(
                    epsilon=float(eps),
                    delta=float(delta),
                    classification=classify_stability(
                        float(delta), float(eps), order=order, tol=cell
                    ),
                )
            )
    return out
