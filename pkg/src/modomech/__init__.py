"""Entanglement dynamics of two coupled mechanical oscillators inside a
periodically modulated, driven optical cavity.

The package integrates the classical mean-field equations jointly with the
Gaussian covariance dynamics of the fluctuations, quantifies mechanical
entanglement through the logarithmic negativity, and classifies the
parametric (in)stability of the mechanical difference mode.
"""

__version__ = "0.1.0"

from .params import SystemParams, params_from_config, thermal_occupancy
from .dynamics import IntegratorOptions, TrajectoryRecord, integrate
from .gaussian import EntanglementValue, log_negativity
from .mathieu import MathieuPoint, Stability, classify_stability, critical_coupling

__all__ = [
    "__version__",
    "SystemParams",
    "params_from_config",
    "thermal_occupancy",
    "IntegratorOptions",
    "TrajectoryRecord",
    "integrate",
    "EntanglementValue",
    "log_negativity",
    "MathieuPoint",
    "Stability",
    "classify_stability",
    "critical_coupling",
]
