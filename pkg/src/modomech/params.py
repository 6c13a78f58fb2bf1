"""System parameters, modulation waveforms, and thermal-state constructors.

All quantities are expressed in units of the mechanical frequency
(``omega_m`` itself defaults to 1). Quadratures are ordered
``(q1, p1, q2, p2, x, y)`` with vacuum variance 1/2, and the temperature
enters only through the mean phonon occupancy of the mechanical baths.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

#: number of bosonic modes: two mechanical plus one cavity
N_MODES = 3
DIM = 2 * N_MODES
VACUUM_VARIANCE = 0.5
#: below this mechanical quality factor the weak-damping modelling assumptions degrade
MIN_QUALITY_FACTOR = 100.0


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of the driven two-oscillator cavity model.

    Attributes
    ----------
    omega_m : float
        Mechanical frequency of both (identical) oscillators.
    delta0 : float
        Bare cavity detuning.
    kappa : float
        Cavity amplitude decay rate.
    gamma_m : float
        Mechanical amplitude damping rate.
    g : float
        Single-photon optomechanical coupling.
    e0, e1 : float
        Static and modulated drive amplitudes; the drive is
        ``e0 + e1*cos(omega_mod*t)``.
    omega_mod : float
        Modulation frequency shared by the drive and the mechanical coupling.
    lambda0 : float
        Amplitude of the modulated inter-oscillator coupling
        ``lambda0*cos(omega_mod*t)``.
    temp_ratio : float
        Bath temperature in units of the temperature scale at which the
        thermal occupancy equals ``1/(e - 1)``; zero means zero temperature.
    """

    omega_m: float = 1.0
    delta0: float = 1.0
    kappa: float = 0.1
    gamma_m: float = 5e-4
    g: float = 1e-5
    e0: float = 1e4
    e1: float = 1e3
    omega_mod: float = 2.003
    lambda0: float = 0.005
    temp_ratio: float = 0.0

    def __post_init__(self) -> None:
        for name in ("omega_m", "kappa", "gamma_m", "omega_mod"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in ("g", "e0", "e1", "lambda0", "temp_ratio"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)!r}")
        quality = self.omega_m / self.gamma_m
        if quality < MIN_QUALITY_FACTOR:
            warnings.warn(
                f"mechanical quality factor {quality:.3g} < {MIN_QUALITY_FACTOR:g}; "
                "the weak-damping model is questionable here",
                stacklevel=2,
            )

    @property
    def modulation_period(self) -> float:
        return 2.0 * math.pi / self.omega_mod

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)


PARAM_NAMES = tuple(f.name for f in fields(SystemParams))


def drive_amplitude(t, params: SystemParams):
    """Cavity drive ``e0 + e1*cos(omega_mod*t)``.

    The time argument is reduced modulo the modulation period before the
    cosine so periodicity survives very long times without precision loss.
    """
    t_red = np.fmod(t, params.modulation_period)
    return params.e0 + params.e1 * np.cos(params.omega_mod * t_red)


def mechanical_coupling(t, params: SystemParams):
    """Inter-oscillator coupling ``lambda0*cos(omega_mod*t)`` (argument-reduced)."""
    t_red = np.fmod(t, params.modulation_period)
    return params.lambda0 * np.cos(params.omega_mod * t_red)


def thermal_occupancy(temp_ratio: float) -> float:
    """Bose occupancy at the given reduced temperature, exactly 0 at zero.

    Uses ``expm1`` so small temperatures do not lose precision to
    cancellation.
    """
    if temp_ratio < 0.0:
        raise ValueError(f"temp_ratio must be non-negative, got {temp_ratio!r}")
    if temp_ratio == 0.0:
        return 0.0
    exponent = 1.0 / temp_ratio
    if exponent > 700.0:  # expm1 would overflow; occupancy underflows to 0
        return 0.0
    return 1.0 / math.expm1(exponent)


def initial_covariance(n_th: float) -> np.ndarray:
    """Uncorrelated start state: thermal mechanics, vacuum cavity."""
    if n_th < 0.0:
        raise ValueError(f"n_th must be non-negative, got {n_th!r}")
    mech = n_th + VACUUM_VARIANCE
    return np.diag([mech, mech, mech, mech, VACUUM_VARIANCE, VACUUM_VARIANCE])


def noise_matrix(params: SystemParams, n_th: float | None = None) -> np.ndarray:
    """Diffusion matrix of the quadrature Langevin noise.

    Only momentum quadratures of the mechanics and both cavity quadratures
    diffuse; mechanical position rows carry no direct noise.
    """
    if n_th is None:
        n_th = thermal_occupancy(params.temp_ratio)
    if n_th < 0.0:
        raise ValueError(f"n_th must be non-negative, got {n_th!r}")
    d_mech = params.gamma_m * (2.0 * n_th + 1.0)
    return np.diag([0.0, d_mech, 0.0, d_mech, params.kappa, params.kappa])


class ConfigError(ValueError):
    """Raised for malformed or unknown configuration content."""


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines into a float-valued dict.

    Blank lines and ``#`` comments are ignored. Keys must match the
    ``SystemParams`` field names exactly; duplicates and non-numeric values
    are rejected.
    """
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in PARAM_NAMES:
            raise ConfigError(
                f"{source}:{lineno}: unknown key {key!r}; valid keys: {', '.join(PARAM_NAMES)}"
            )
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = float(val)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: invalid number {val!r} for {key!r}") from None
    return values


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=str(path))


def params_from_config(path=None, overrides: dict | None = None) -> SystemParams:
    """Build parameters from defaults, an optional config file, and overrides.

    Precedence: overrides > config file > defaults. Raises ``ConfigError``
    for unknown keys in either source and ``ValueError`` for out-of-range
    values.
    """
    values: dict = {}
    if path is not None:
        values.update(load_config(path))
    if overrides:
        for key in overrides:
            if key not in PARAM_NAMES:
                raise ConfigError(
                    f"unknown parameter {key!r}; valid keys: {', '.join(PARAM_NAMES)}"
                )
        values.update({k: float(v) for k, v in overrides.items() if v is not None})
    return SystemParams(**values)
