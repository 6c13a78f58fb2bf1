"""Shared helpers for the test suite."""

import numpy as np
from scipy.linalg import expm

from modomech.gaussian import symplectic_form


def random_symplectic(rng, n_modes: int, scale: float = 0.4) -> np.ndarray:
    """Random symplectic matrix exp(J h) with h symmetric."""
    n = 2 * n_modes
    h = rng.normal(scale=scale, size=(n, n))
    h = 0.5 * (h + h.T)
    return expm(symplectic_form(n_modes) @ h)


def random_physical_cm(rng, n_modes: int, nu_max: float = 3.0):
    """Random covariance with prescribed symplectic spectrum >= 1/2.

    Returns (cm, nus); the construction V = S diag(nu) S^T guarantees the
    uncertainty bound exactly.
    """
    s = random_symplectic(rng, n_modes)
    nus = np.sort(rng.uniform(0.5, nu_max, size=n_modes))
    cm = s @ np.diag(np.repeat(nus, 2)) @ s.T
    return 0.5 * (cm + cm.T), nus


def two_mode_squeezed_cm(r: float) -> np.ndarray:
    """Two-mode squeezed vacuum covariance (vacuum variance 1/2)."""
    c = 0.5 * np.cosh(2.0 * r)
    s = 0.5 * np.sinh(2.0 * r)
    return np.array(
        [
            [c, 0.0, s, 0.0],
            [0.0, c, 0.0, -s],
            [s, 0.0, c, 0.0],
            [0.0, -s, 0.0, c],
        ]
    )
