"""Gaussian-state tools: entanglement, normal modes, and Wigner functions.

Conventions: quadrature ordering ``(q1, p1, q2, p2, x, y)``, vacuum variance
1/2, so a two-mode state is separable exactly when the smallest symplectic
eigenvalue of its partially transposed covariance is >= 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import SystemParams
from .dynamics import IntegratorOptions, TrajectoryRecord, integrate

VACUUM_VARIANCE = 0.5
#: relative tolerance below which a negative PT radicand counts as roundoff
RADICAND_TOL = 1e-12

MODE_PLUS = "plus"
MODE_MINUS = "minus"
MODE_CAVITY = "cavity"
_MODE_SLICES = {
    MODE_PLUS: slice(0, 2),
    MODE_MINUS: slice(2, 4),
    MODE_CAVITY: slice(4, 6),
}

_INV_SQRT2 = 1.0 / math.sqrt(2.0)

#: maps (q1,p1,q2,p2,x,y) to (q+,p+,q-,p-,x,y); orthogonal, symplectic, involutive
NORMAL_MODE_MATRIX = np.array(
    [
        [_INV_SQRT2, 0.0, _INV_SQRT2, 0.0, 0.0, 0.0],
        [0.0, _INV_SQRT2, 0.0, _INV_SQRT2, 0.0, 0.0],
        [_INV_SQRT2, 0.0, -_INV_SQRT2, 0.0, 0.0, 0.0],
        [0.0, _INV_SQRT2, 0.0, -_INV_SQRT2, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ]
)


class UnphysicalCovarianceError(ValueError):
    """Input covariance is not that of a physical Gaussian state."""


@dataclass(frozen=True)
class EntanglementValue:
    """Logarithmic negativity together with the PT symplectic eigenvalue."""

    log_negativity: float
    nu_minus: float

    @property
    def entangled(self) -> bool:
        return self.log_negativity > 0.0


def symplectic_form(n_modes: int) -> np.ndarray:
    j = np.array([[0.0, 1.0], [-1.0, 0.0]])
    out = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        out[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = j
    return out


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic spectrum via the general eigenvalue route.

    Independent of the closed-form two-mode expressions, so it doubles as a
    test oracle; physical states have all values >= 1/2.
    """
    cov = np.asarray(cov, dtype=float)
    n_modes = cov.shape[0] // 2
    eigs = np.linalg.eigvals(1j * symplectic_form(n_modes) @ cov)
    vals = np.sort(np.abs(eigs))
    # |eigs| come in duplicate pairs; keep one of each
    return vals[::2][:n_modes] if vals.size == 2 * n_modes else vals[:n_modes]


def is_physical(cov: np.ndarray, tol: float = 1e-9) -> bool:
    """Uncertainty-principle check, on demand rather than per call."""
    cov = np.asarray(cov, dtype=float)
    if not np.allclose(cov, cov.T, atol=1e-9):
        return False
    return bool(np.min(symplectic_eigenvalues(cov)) >= VACUUM_VARIANCE - tol)


def reduce_mechanical(cov: np.ndarray) -> np.ndarray:
    """4x4 mechanical block of the full covariance."""
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (6, 6):
        raise ValueError(f"expected a 6x6 covariance, got shape {cov.shape}")
    return cov[:4, :4].copy()


def ppt_symplectic_eigenvalues(cm: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of the partially transposed two-mode covariance.

    General-eigensolver oracle for the closed form in ``log_negativity``.
    """
    cm = np.asarray(cm, dtype=float)
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    return symplectic_eigenvalues(flip @ cm @ flip)


def log_negativity(cm: np.ndarray, tol: float = RADICAND_TOL) -> EntanglementValue:
    """Logarithmic negativity of a two-mode covariance (closed form).

    Small negative radicands within ``tol * sigma^2`` are clamped to zero;
    anything more negative, or a non-positive PT eigenvalue, raises
    ``UnphysicalCovarianceError``.
    """
    cm = np.asarray(cm, dtype=float)
    if cm.shape != (4, 4):
        raise ValueError(f"expected a 4x4 covariance, got shape {cm.shape}")
    det_a = float(np.linalg.det(cm[:2, :2]))
    det_b = float(np.linalg.det(cm[2:, 2:]))
    det_c = float(np.linalg.det(cm[:2, 2:]))
    det_v = float(np.linalg.det(cm))

    sigma = det_a + det_b - 2.0 * det_c
    rad = sigma * sigma - 4.0 * det_v
    scale = max(sigma * sigma, 1.0)
    if rad < -tol * scale:
        raise UnphysicalCovarianceError(
            f"PT radicand {rad:.3e} is negative beyond tolerance; "
            "input is not a physical two-mode covariance"
        )
    rad = max(rad, 0.0)
    denom = sigma + math.sqrt(rad)
    # smaller root in quotient form; the subtractive form cancels when nu- << nu+
    nu_sq = 2.0 * det_v / denom if denom > 0.0 else 0.0
    if nu_sq <= 0.0:
        raise UnphysicalCovarianceError(
            f"non-positive PT symplectic eigenvalue (nu^2 = {nu_sq:.3e})"
        )
    nu = math.sqrt(nu_sq)
    en = max(0.0, -math.log(2.0 * nu))
    return EntanglementValue(log_negativity=en, nu_minus=nu)


def normal_mode_transform(cov: np.ndarray) -> np.ndarray:
    """Covariance in the (sum, difference, cavity) mode basis."""
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (6, 6):
        raise ValueError(f"expected a 6x6 covariance, got shape {cov.shape}")
    s = NORMAL_MODE_MATRIX
    return s @ cov @ s.T


def normal_mode_means(means: np.ndarray) -> np.ndarray:
    means = np.asarray(means, dtype=float)
    if means.shape != (6,):
        raise ValueError(f"expected a 6-vector of means, got shape {means.shape}")
    return NORMAL_MODE_MATRIX @ means


def single_mode_reduce(
    cov: np.ndarray, mode: str, means: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """2x2 covariance (and mean) of one normal mode or the cavity."""
    if mode not in _MODE_SLICES:
        raise ValueError(f"mode must be one of {sorted(_MODE_SLICES)}, got {mode!r}")
    sl = _MODE_SLICES[mode]
    full = normal_mode_transform(cov)
    cm = full[sl, sl].copy()
    if means is None:
        mean = np.zeros(2)
    else:
        mean = normal_mode_means(means)[sl].copy()
    return cm, mean


def wigner(points: np.ndarray, cm: np.ndarray, mean: np.ndarray | None = None):
    """Single-mode Gaussian Wigner density at phase-space point(s).

    ``points`` has shape (2,) or (..., 2). The covariance must be positive
    definite.
    """
    cm = np.asarray(cm, dtype=float)
    if cm.shape != (2, 2):
        raise ValueError(f"expected a 2x2 covariance, got shape {cm.shape}")
    det = float(np.linalg.det(cm))
    if det <= 0.0:
        raise UnphysicalCovarianceError(f"covariance determinant {det:.3e} <= 0")
    inv = np.linalg.inv(cm)
    pts = np.asarray(points, dtype=float)
    if mean is not None:
        pts = pts - np.asarray(mean, dtype=float)
    quad = np.einsum("...i,ij,...j->...", pts, inv, pts)
    return np.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))


@dataclass
class WignerField:
    """Wigner density on a square grid: ``w[i, j] = W(q=q[i], p=p[j])``."""

    q: np.ndarray
    p: np.ndarray
    w: np.ndarray
    cm: np.ndarray
    mean: np.ndarray

    def normalization(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.w, self.p, axis=1), self.q))


def wigner_field(
    cm: np.ndarray,
    mean: np.ndarray | None = None,
    grid_points: int = 201,
    span_sigmas: float = 6.0,
) -> WignerField:
    """Evaluate the Wigner density on a centred square grid.

    The half-width is ``span_sigmas`` standard deviations of the widest
    quadrature (largest covariance eigenvalue).
    """
    cm = np.asarray(cm, dtype=float)
    sigma = math.sqrt(float(np.max(np.linalg.eigvalsh(cm))))
    half = span_sigmas * sigma
    q = np.linspace(-half, half, grid_points)
    p = np.linspace(-half, half, grid_points)
    qq, pp = np.meshgrid(q, p, indexing="ij")
    pts = np.stack([qq, pp], axis=-1)
    w = wigner(pts, cm, mean=None)
    return WignerField(
        q=q,
        p=p,
        w=w,
        cm=cm.copy(),
        mean=np.zeros(2) if mean is None else np.asarray(mean, dtype=float).copy(),
    )


class TrajectoryDivergedError(RuntimeError):
    """Requested a state beyond the covariance blow-up time."""

    def __init__(self, requested_time: float, divergence_time: float):
        super().__init__(
            f"trajectory diverged at t={divergence_time:.6g} "
            f"before the requested t={requested_time:.6g}"
        )
        self.requested_time = requested_time
        self.divergence_time = divergence_time


@dataclass
class WignerSnapshot:
    """Field of one normal mode at a fixed time along a trajectory.

    The field is that of the zero-mean fluctuation state; the transformed
    classical mean of the mode is carried separately in ``mean``.
    """

    params: SystemParams
    time: float
    mode: str
    field: WignerField
    mean: np.ndarray
    record: TrajectoryRecord


def wigner_snapshot(
    params: SystemParams,
    time: float,
    mode: str,
    grid_points: int = 201,
    span_sigmas: float = 6.0,
    options: IntegratorOptions | None = None,
) -> WignerSnapshot:
    """Integrate to ``time`` and return the Wigner field of one mode."""
    if mode not in _MODE_SLICES:
        raise ValueError(f"mode must be one of {sorted(_MODE_SLICES)}, got {mode!r}")
    record = integrate(params, time, options)
    if record.diverged and record.final_time < time:
        raise TrajectoryDivergedError(time, record.divergence_time)
    cm, mean = single_mode_reduce(
        record.final_covariance, mode, means=record.final_classical
    )
    field = wigner_field(cm, grid_points=grid_points, span_sigmas=span_sigmas)
    return WignerSnapshot(
        params=params,
        time=record.final_time,
        mode=mode,
        field=field,
        mean=mean,
        record=record,
    )
