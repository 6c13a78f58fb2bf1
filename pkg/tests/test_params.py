import math

import numpy as np
import pytest

from modomech.params import (
    ConfigError,
    SystemParams,
    drive_amplitude,
    initial_covariance,
    mechanical_coupling,
    noise_matrix,
    params_from_config,
    parse_config_text,
    thermal_occupancy,
)


def test_defaults():
    p = SystemParams()
    assert p.omega_m == 1.0
    assert p.delta0 == 1.0
    assert p.kappa == 0.1
    assert p.gamma_m == 5e-4
    assert p.g == 1e-5
    assert p.e0 == 1e4
    assert p.e1 == 1e3
    assert p.omega_mod == 2.003
    assert p.lambda0 == 0.005
    assert p.temp_ratio == 0.0


def test_modulation_period():
    p = SystemParams()
    assert p.modulation_period == pytest.approx(2.0 * math.pi / 2.003, rel=1e-15)
    assert p.modulation_period == pytest.approx(3.136887322605884, rel=1e-12)


def test_replace_keeps_frozen():
    p = SystemParams()
    q = p.replace(lambda0=0.007)
    assert q.lambda0 == 0.007
    assert p.lambda0 == 0.005
    with pytest.raises(AttributeError):
        p.lambda0 = 1.0  # type: ignore[misc]


@pytest.mark.parametrize(
    "kwargs",
    [
        {"omega_m": 0.0},
        {"omega_m": -1.0},
        {"kappa": 0.0},
        {"gamma_m": -1e-3},
        {"omega_mod": 0.0},
        {"g": -1e-5},
        {"e0": -1.0},
        {"lambda0": -0.001},
        {"temp_ratio": -0.5},
    ],
)
def test_validation_rejects(kwargs):
    with pytest.raises(ValueError):
        SystemParams(**kwargs)


def test_low_quality_factor_warns():
    with pytest.warns(UserWarning):
        SystemParams(gamma_m=0.5)


def test_drive_and_coupling_modulation():
    p = SystemParams()
    tau = p.modulation_period
    assert drive_amplitude(0.0, p) == pytest.approx(p.e0 + p.e1)
    assert mechanical_coupling(0.0, p) == pytest.approx(p.lambda0)
    # quarter period: cosine vanishes
    assert drive_amplitude(tau / 4.0, p) == pytest.approx(p.e0, abs=1e-9 * p.e1)
    assert mechanical_coupling(tau / 4.0, p) == pytest.approx(0.0, abs=1e-12)
    # periodicity holds far from the origin
    assert drive_amplitude(1000.0 * tau + 0.1, p) == pytest.approx(
        drive_amplitude(0.1, p), rel=1e-9
    )


def test_thermal_occupancy():
    assert thermal_occupancy(0.0) == 0.0
    # T/T0 = 1/ln(2) gives exactly one phonon
    assert thermal_occupancy(1.0 / math.log(2.0)) == pytest.approx(1.0, rel=1e-12)
    assert thermal_occupancy(1e-3) == 0.0  # underflows cleanly
    big = thermal_occupancy(100.0)
    # classical limit n ~ T/T0 - 1/2
    assert big == pytest.approx(100.0 - 0.5, rel=1e-3)
    with pytest.raises(ValueError):
        thermal_occupancy(-0.1)


def test_initial_covariance_and_noise():
    v = initial_covariance(0.0)
    assert v.shape == (6, 6)
    assert np.allclose(v, np.diag([0.5] * 6))
    v2 = initial_covariance(2.0)
    assert np.allclose(np.diag(v2), [2.5, 2.5, 2.5, 2.5, 0.5, 0.5])

    p = SystemParams(temp_ratio=0.0)
    d = noise_matrix(p)
    assert np.allclose(d, np.diag([0.0, p.gamma_m, 0.0, p.gamma_m, p.kappa, p.kappa]))
    d2 = noise_matrix(p, n_th=1.0)
    assert d2[1, 1] == pytest.approx(3.0 * p.gamma_m)


def test_parse_config_text():
    text = """
    # defaults shifted
    lambda0 = 0.007
    temp_ratio = 0.5

    kappa=0.2  # inline comment
    """
    values = parse_config_text(text)
    assert values == {"lambda0": 0.007, "temp_ratio": 0.5, "kappa": 0.2}


@pytest.mark.parametrize(
    "text,match",
    [
        ("unknown_key = 1.0", "unknown"),
        ("lambda0 = abc", "number"),
        ("lambda0 = 1\nlambda0 = 2", "duplicate"),
        ("lambda0", "expected"),
    ],
)
def test_parse_config_rejects(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config_text(text)


def test_params_from_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("lambda0 = 0.003\nkappa = 0.2\n")
    p = params_from_config(cfg, {"kappa": 0.3})
    assert p.lambda0 == 0.003  # file beats default
    assert p.kappa == 0.3  # override beats file
    assert p.omega_mod == 2.003  # default survives


def test_params_from_config_defaults_only():
    assert params_from_config() == SystemParams()
