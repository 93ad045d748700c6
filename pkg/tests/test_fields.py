import numpy as np
import pytest

from orbits.errors import DomainError, InvalidParameterError, UnknownPresetError
from orbits.fields import PRESETS, eval_field, gauge_consistency, make_preset, parameter_family

from .conftest import PRESET_CASES


def random_points(rng, k=20, radius=1.5):
    q = radius * np.sqrt(rng.random(k)) * np.exp(2j * np.pi * rng.random(k))
    return q, rng.random(k)


def test_kepler_examples():
    m = make_preset("kepler")
    assert m.E(1 + 2j, 0.3) == 0.0
    f = eval_field(m, 1 + 2j, 0.3)
    assert f.E == 0 and f.dE_dt == 0 and f.gradE == 0 and f.B == 0
    assert f.A[0] == 0 and f.A[1] == 0
    assert gauge_consistency(m, 0.3 - 0.2j) == 0.0
    assert m.autonomous


def test_rotating_examples():
    m = make_preset("rotating_kepler", {"omega": 1.0})
    q = np.array([0.3, 1 + 1j, -2j])
    assert np.all(m.B(q) == 2.0)
    f = eval_field(m, 2.0, 0.0)
    assert f.E == pytest.approx(-2.0)
    assert f.gradE == pytest.approx(-2.0)
    assert gauge_consistency(m, 1 + 1j, 1e-5) < 1e-8
    assert make_preset("rotating_kepler", {"omega": 0.5}).B(1j) == 1.0


def test_forced_stark_example():
    m = make_preset("forced_stark", {"f": 1, "m": 1})
    assert m.dE_dt(1.0, 0.25) == pytest.approx(-2 * np.pi)
    assert not m.autonomous


def test_bicircular_gauge_and_flags():
    m = make_preset("bicircular")
    rng = np.random.default_rng(0)
    for q in random_points(rng, 10)[0]:
        assert gauge_consistency(m, q, 1e-5) < 1e-8
    assert not m.autonomous
    # moon at the origin is an equilibrium of the tidal part when the sun is off
    assert abs(make_preset("bicircular", {"mS": 0.0}).gradE(0.0, 0.0)) < 1e-12


@pytest.mark.parametrize("preset", sorted(PRESET_CASES))
def test_gradient_matches_finite_differences(preset):
    m = make_preset(preset, PRESET_CASES[preset])
    rng = np.random.default_rng(1)
    q, t = random_points(rng)
    h = 1e-5
    fd = ((m.E(q + h, t) - m.E(q - h, t)) + 1j * (m.E(q + 1j * h, t) - m.E(q - 1j * h, t))) / (2 * h)
    g = m.gradE(q, t)
    scale = np.maximum(np.abs(g), 1.0)
    assert np.all(np.abs(fd - g) / scale < 1e-5)


@pytest.mark.parametrize("preset", sorted(PRESET_CASES))
def test_time_derivative_matches_finite_differences(preset):
    m = make_preset(preset, PRESET_CASES[preset])
    rng = np.random.default_rng(2)
    q, t = random_points(rng)
    h = 1e-5
    fd = (m.E(q, t + h) - m.E(q, t - h)) / (2 * h)
    d = m.dE_dt(q, t)
    assert np.all(np.abs(fd - d) / np.maximum(np.abs(d), 1.0) < 1e-5)


@pytest.mark.parametrize("preset", sorted(PRESET_CASES))
def test_period_one_in_time(preset):
    m = make_preset(preset, PRESET_CASES[preset])
    q, t = random_points(np.random.default_rng(3))
    assert np.allclose(m.E(q, t + 1.0), m.E(q, t), rtol=1e-12, atol=1e-12)
    assert np.allclose(m.gradE(q, t + 1.0), m.gradE(q, t), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("preset", sorted(PRESET_CASES))
def test_gauge_grid(preset):
    m = make_preset(preset, PRESET_CASES[preset])
    xs = np.linspace(-1.5, 1.5, 10)
    for x in xs:
        for y in xs:
            assert gauge_consistency(m, complex(x, y)) < 1e-7


@pytest.mark.parametrize("preset", ["kepler", "rotating_kepler"])
def test_autonomous_presets(preset):
    m = make_preset(preset, PRESET_CASES[preset])
    q, t = random_points(np.random.default_rng(4))
    assert np.array_equal(m.E(q, t), m.E(q, 0.0 * t + 0.77))
    assert np.all(m.dE_dt(q, t) == 0)


@pytest.mark.parametrize("preset", sorted(PRESET_CASES))
def test_jacobian_of_gauge(preset):
    m = make_preset(preset, PRESET_CASES[preset])
    q = 0.4 - 0.7j
    h = 1e-6
    a11, a12, a21, a22 = m.A_jacobian(np.array([q]))
    d1 = [(u - v) / (2 * h) for u, v in zip(m.A(q + h), m.A(q - h))]
    d2 = [(u - v) / (2 * h) for u, v in zip(m.A(q + 1j * h), m.A(q - 1j * h))]
    assert np.allclose([a11[0], a21[0]], d1, atol=1e-8)
    assert np.allclose([a12[0], a22[0]], d2, atol=1e-8)


def test_errors():
    with pytest.raises(UnknownPresetError):
        make_preset("three_body")
    with pytest.raises(InvalidParameterError):
        make_preset("bicircular", {"mE": -1.0})
    with pytest.raises(InvalidParameterError):
        make_preset("bicircular", {"aS": 0.0})
    with pytest.raises(InvalidParameterError):
        make_preset("forced_stark", {"m": 1.5})
    with pytest.raises(InvalidParameterError):
        make_preset("bicircular", {"omega_s": 0.3})
    with pytest.raises(InvalidParameterError):
        make_preset("kepler", exclusion_radius=-1.0)


def test_bicircular_domain():
    m = make_preset("bicircular", {}, exclusion_radius=0.2)
    with pytest.raises(DomainError):
        eval_field(m, m.aE + 0.1, 0.0)
    with pytest.raises(DomainError):
        eval_field(m, m.sun(0.3) + 0.05j, 0.3)
    eval_field(m, 0.5, 0.0)
    # default exclusion radius is a tenth of the earth distance
    assert make_preset("bicircular").exclusion_radius == pytest.approx(0.1 * m.aE)


def test_parameter_family():
    fam = parameter_family("rotating_kepler", {}, "omega", 0.0, 2.0)
    assert fam(0.0).omega == 0.0 and fam(0.5).omega == 1.0
    with pytest.raises(UnknownPresetError):
        parameter_family("nope", {}, "x", 0, 1)


def test_serialization_round_trip():
    for name in PRESETS:
        m = make_preset(name, PRESET_CASES[name])
        d = m.to_dict()
        m2 = make_preset(d["preset"], d["params"], d.get("exclusion_radius"))
        q, t = random_points(np.random.default_rng(5))
        assert np.array_equal(m.E(q, t), m2.E(q, t))
