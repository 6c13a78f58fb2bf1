import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from modomech import IntegratorOptions, SystemParams
from modomech.gaussian import (
    MODE_CAVITY,
    MODE_MINUS,
    MODE_PLUS,
    NORMAL_MODE_MATRIX,
    EntanglementValue,
    TrajectoryDivergedError,
    UnphysicalCovarianceError,
    is_physical,
    log_negativity,
    normal_mode_means,
    normal_mode_transform,
    ppt_symplectic_eigenvalues,
    reduce_mechanical,
    single_mode_reduce,
    symplectic_eigenvalues,
    symplectic_form,
    wigner,
    wigner_field,
    wigner_snapshot,
)
from support import random_physical_cm, random_symplectic, two_mode_squeezed_cm


def test_vacuum_is_separable():
    val = log_negativity(0.5 * np.eye(4))
    assert val.log_negativity == 0.0
    assert val.nu_minus == pytest.approx(0.5, rel=1e-14)
    assert not val.entangled


@pytest.mark.parametrize("r", [0.1, 0.5, 1.0, 2.0])
def test_two_mode_squeezed_log_negativity(r):
    val = log_negativity(two_mode_squeezed_cm(r))
    assert val.log_negativity == pytest.approx(2.0 * r, abs=1e-9)
    assert val.nu_minus == pytest.approx(0.5 * math.exp(-2.0 * r), rel=1e-9)
    assert val.entangled


def test_strong_squeezing_stays_accurate():
    # nu+/nu- ~ e^{4r}: the subtractive root form underflows to nu^2 <= 0 and
    # raises; in quotient form only the det conditioning (~cond*eps) remains
    val = log_negativity(two_mode_squeezed_cm(5.0))
    assert val.log_negativity == pytest.approx(10.0, abs=1e-7)


def test_thermal_product_is_separable():
    n = 0.7
    val = log_negativity((n + 0.5) * np.eye(4))
    assert val.log_negativity == 0.0
    assert val.nu_minus == pytest.approx(n + 0.5, rel=1e-12)


def test_local_symplectic_invariance():
    rng = np.random.default_rng(11)
    for _ in range(5):
        cm, _ = random_physical_cm(rng, 2)
        base = log_negativity(cm).log_negativity
        local = np.zeros((4, 4))
        local[:2, :2] = random_symplectic(rng, 1)
        local[2:, 2:] = random_symplectic(rng, 1)
        moved = log_negativity(local @ cm @ local.T).log_negativity
        assert moved == pytest.approx(base, abs=1e-10)


def test_matches_ppt_eigenvalue_oracle():
    # Simon criterion: entangled iff the PT symplectic minimum dips below 1/2
    rng = np.random.default_rng(7)
    n_entangled = 0
    for _ in range(1000):
        cm, _ = random_physical_cm(rng, 2)
        val = log_negativity(cm)
        nu_oracle = float(np.min(ppt_symplectic_eigenvalues(cm)))
        assert val.nu_minus == pytest.approx(nu_oracle, rel=1e-8)
        assert val.entangled == (nu_oracle < 0.5 - 1e-12)
        n_entangled += val.entangled
    # the sampler must exercise both branches for the check to mean anything
    assert 0 < n_entangled < 1000


def test_indefinite_covariance_raises():
    cm = np.eye(4) * 0.5
    cm[:2, :2] = [[1.0, 2.0], [2.0, 1.0]]
    with pytest.raises(UnphysicalCovarianceError):
        log_negativity(cm)


def test_log_negativity_shape_check():
    with pytest.raises(ValueError, match="4x4"):
        log_negativity(np.eye(6))


def test_reduce_mechanical_takes_upper_block():
    cov = np.arange(36, dtype=float).reshape(6, 6)
    cov = 0.5 * (cov + cov.T)
    assert_allclose(reduce_mechanical(cov), cov[:4, :4])
    with pytest.raises(ValueError, match="6x6"):
        reduce_mechanical(np.eye(4))


def test_normal_mode_matrix_properties():
    s = NORMAL_MODE_MATRIX
    assert_allclose(s @ s, np.eye(6), atol=1e-15)
    assert_allclose(s @ s.T, np.eye(6), atol=1e-15)
    omega = symplectic_form(3)
    assert_allclose(s @ omega @ s.T, omega, atol=1e-15)


def test_normal_mode_transform_preserves_spectrum():
    rng = np.random.default_rng(3)
    cov = rng.normal(size=(6, 6))
    cov = 0.5 * (cov + cov.T)
    assert_allclose(
        np.linalg.eigvalsh(normal_mode_transform(cov)),
        np.linalg.eigvalsh(cov),
        atol=1e-12,
    )


def test_minus_block_entry_identities():
    # the kernels compute these combinations without forming the transform
    rng = np.random.default_rng(5)
    cov = rng.normal(size=(6, 6))
    cov = 0.5 * (cov + cov.T)
    block, _ = single_mode_reduce(cov, MODE_MINUS)
    v = cov
    assert block[0, 0] == pytest.approx(0.5 * (v[0, 0] + v[2, 2] - 2 * v[0, 2]))
    assert block[1, 1] == pytest.approx(0.5 * (v[1, 1] + v[3, 3] - 2 * v[1, 3]))
    assert block[0, 1] == pytest.approx(
        0.5 * (v[0, 1] - v[0, 3] - v[2, 1] + v[2, 3])
    )


def test_single_mode_reduce_means():
    cov = 0.5 * np.eye(6)
    means = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    _, plus = single_mode_reduce(cov, MODE_PLUS, means=means)
    _, minus = single_mode_reduce(cov, MODE_MINUS, means=means)
    cm_cav, cavity = single_mode_reduce(cov, MODE_CAVITY, means=means)
    assert_allclose(plus, [(1 + 3) * inv_sqrt2, (2 + 4) * inv_sqrt2])
    assert_allclose(minus, [(1 - 3) * inv_sqrt2, (2 - 4) * inv_sqrt2])
    assert_allclose(cavity, [5.0, 6.0])
    assert_allclose(cm_cav, 0.5 * np.eye(2))
    with pytest.raises(ValueError, match="mode"):
        single_mode_reduce(cov, "q")
    with pytest.raises(ValueError, match="6-vector"):
        normal_mode_means(np.zeros(4))


def test_symplectic_eigenvalues_known_cases():
    assert_allclose(
        symplectic_eigenvalues(np.diag([0.7, 0.7, 1.9, 1.9])), [0.7, 1.9], rtol=1e-12
    )
    # pure two-mode squeezing: both symplectic eigenvalues stay at vacuum
    assert_allclose(
        symplectic_eigenvalues(two_mode_squeezed_cm(0.8)), [0.5, 0.5], rtol=1e-10
    )


def test_is_physical():
    assert is_physical(0.5 * np.eye(4))
    assert not is_physical(0.4 * np.eye(4))
    tilted = 0.5 * np.eye(4)
    tilted[0, 1] = 0.3
    assert not is_physical(tilted)


def test_wigner_peak_values():
    cm = 0.5 * np.eye(2)
    assert wigner(np.zeros(2), cm) == pytest.approx(1.0 / math.pi, rel=1e-12)
    rng = np.random.default_rng(19)
    cm, _ = random_physical_cm(rng, 1)
    mean = np.array([0.4, -1.1])
    peak = 1.0 / (2.0 * math.pi * math.sqrt(np.linalg.det(cm)))
    assert wigner(mean, cm, mean=mean) == pytest.approx(peak, rel=1e-12)


def test_wigner_shape_and_singular_checks():
    with pytest.raises(ValueError, match="2x2"):
        wigner(np.zeros(2), np.eye(4))
    with pytest.raises(UnphysicalCovarianceError):
        wigner(np.zeros(2), np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_wigner_field_normalizes():
    rng = np.random.default_rng(23)
    for _ in range(3):
        cm, _ = random_physical_cm(rng, 1)
        field = wigner_field(cm)
        assert field.normalization() == pytest.approx(1.0, abs=1e-6)


def test_wigner_field_layout():
    cm = np.array([[0.8, 0.1], [0.1, 0.6]])
    field = wigner_field(cm, grid_points=41)
    assert field.q.shape == (41,) and field.p.shape == (41,)
    assert field.w.shape == (41, 41)
    i, j = 7, 30
    assert field.w[i, j] == pytest.approx(
        float(wigner(np.array([field.q[i], field.p[j]]), cm)), rel=1e-12
    )


def test_wigner_snapshot_at_start_is_vacuum():
    snap = wigner_snapshot(SystemParams(), 0.0, MODE_MINUS, grid_points=31)
    assert_allclose(snap.field.cm, 0.5 * np.eye(2), atol=1e-12)
    assert_allclose(snap.mean, np.zeros(2), atol=1e-12)
    assert snap.time == 0.0


def test_wigner_snapshot_past_divergence_raises():
    p = SystemParams(lambda0=0.05)
    t_want = 500 * p.modulation_period
    with pytest.raises(TrajectoryDivergedError) as info:
        wigner_snapshot(
            p,
            t_want,
            MODE_MINUS,
            options=IntegratorOptions(divergence_threshold=1e6),
        )
    assert info.value.requested_time == t_want
    assert info.value.divergence_time < t_want


def test_entanglement_value_flag():
    assert EntanglementValue(0.3, 0.3).entangled
    assert not EntanglementValue(0.0, 0.5).entangled
