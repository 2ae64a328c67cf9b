import numpy as np
import pytest
from scipy.constants import Boltzmann

from rydsense.dephasing import (
    CS_52D,
    CS_MASS,
    TRANSIT_ANCHORS,
    TRANSIT_CONSTANT,
    GasParams,
    assemble_budget,
    collision_cross_section,
    collision_speed,
    collisional_rate,
    cs_density,
    elastic_coefficient,
    inelastic_coefficient,
    mean_speed,
    relative_speed,
    rms_speed,
    transit_broadening,
)
from rydsense.errors import ValidationError
from rydsense.spectroscopy import CellConditions

KHZ = 2 * np.pi * 1e3


def test_room_density_anchor():
    assert cs_density(294.0) == pytest.approx(3.1e16, rel=1e-12)


def test_density_frozen_value_at_320K():
    # liquid-branch vapor pressure, independently rescaled to the room anchor
    def p_solid(T):
        return 10 ** (4.711 - 3999 / T)

    tm = 301.59
    p_liquid = 10 ** (4.165 - 3830 / 320) * p_solid(tm) / 10 ** (4.165 - 3830 / tm)
    ratio = (p_liquid / 320) / (p_solid(294) / 294)
    assert cs_density(320.0) == pytest.approx(3.1e16 * ratio, rel=1e-12)
    assert cs_density(320.0) == pytest.approx(3.36888708502e17, rel=1e-10)


def test_density_is_continuous_and_increasing():
    T = np.linspace(280, 340, 601)
    n = cs_density(T)
    assert np.all(np.diff(n) > 0)
    assert cs_density(301.59 + 1e-9) == pytest.approx(cs_density(301.59 - 1e-9), rel=1e-6)
    with pytest.raises(ValidationError):
        cs_density(200.0)


def test_speed_conventions():
    T = 294.0
    vbar = np.sqrt(8 * Boltzmann * T / (np.pi * CS_MASS))
    assert mean_speed(T) == pytest.approx(vbar)
    assert relative_speed(T) == pytest.approx(np.sqrt(2) * vbar)
    assert rms_speed(T) == pytest.approx(np.sqrt(3 * Boltzmann * T / CS_MASS))
    assert collision_speed(T, convention="mean") == pytest.approx(vbar)
    with pytest.raises(ValidationError):
        collision_speed(T, convention="bogus")


def test_collision_coefficients():
    el = elastic_coefficient()
    inel = inelastic_coefficient()
    assert el == pytest.approx(1.2437590041e-13, rel=1e-9)
    assert inel == pytest.approx(4.3421957037e-14, rel=1e-9)
    assert el + inel == pytest.approx(1.7e-13, rel=0.05)


def test_elastic_scales_as_cube_root_of_speed():
    slow = elastic_coefficient(CS_52D, 200.0)
    fast = elastic_coefficient(CS_52D, 400.0)
    assert fast / slow == pytest.approx(2 ** (1 / 6), rel=1e-12)


def test_inelastic_scaling_with_quantum_number():
    doubled = GasParams(effective_n=2 * CS_52D.effective_n)
    assert inelastic_coefficient(doubled) == pytest.approx(inelastic_coefficient() / 2)


def test_collisional_rate_linear_in_density():
    r1, r2 = collisional_rate(1e16), collisional_rate(3e16)
    assert r2 == pytest.approx(3 * r1)
    assert collisional_rate(3.1e16) / KHZ == pytest.approx(5.2, rel=0.01)
    with pytest.raises(ValidationError):
        collisional_rate(-1.0)


def test_cross_section_roundtrip():
    v = rms_speed(294.0)
    sigma = collision_cross_section(1.7e-13, v)
    # Gamma[Hz] = sigma[cm^2] * v[cm/s] * rho[cm^-3]
    assert sigma * v * 100 * 1.0 == pytest.approx(1.7e-13 * 1e6)
    assert sigma == pytest.approx(7.2e-12, rel=0.01)


def test_transit_anchors_within_ten_percent():
    for d, rate in TRANSIT_ANCHORS:
        assert transit_broadening(d) == pytest.approx(rate, rel=0.10)
    assert 0.2 < TRANSIT_CONSTANT < 1.0


def test_transit_inverse_in_diameter():
    assert transit_broadening(0.2e-3) == pytest.approx(2 * transit_broadening(0.4e-3))


def test_assemble_budget_defaults_and_overrides():
    cond = CellConditions(coupling_diameter=0.5e-3)
    b = assemble_budget(cond)
    assert b.transit == pytest.approx(transit_broadening(0.5e-3))
    assert b.collisional == pytest.approx(collisional_rate(cond.density))
    assert b.laser == pytest.approx(70 * KHZ)
    assert b.magnetic == pytest.approx(50 * KHZ)
    b2 = assemble_budget(cond, overrides={"transit": 1.0, "laser": 0.0})
    assert (b2.transit, b2.laser) == (1.0, 0.0)
    with pytest.raises(ValidationError):
        assemble_budget(cond, overrides={"bogus": 1.0})


def test_default_coupling_beam_sets_room_transit_rate():
    b = assemble_budget(CellConditions())
    assert b.transit / KHZ == pytest.approx(300, rel=0.01)
