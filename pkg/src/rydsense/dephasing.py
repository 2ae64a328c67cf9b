"""Physically derived relaxation rates for a Cs vapor cell.

Reduced-unit collision coefficients are quoted as ``cm^3 MHz`` where MHz is an
ordinary frequency (FWHM contribution). Functions returning a *rate* convert to
angular units (rad/s) with a factor 2*pi.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import Boltzmann, atomic_mass, e, epsilon_0, h, physical_constants, pi

from .core import DephasingBudget
from .errors import ValidationError

A0 = physical_constants["Bohr radius"][0]
AU_VELOCITY = physical_constants["atomic unit of velocity"][0]
AU_TIME = physical_constants["atomic unit of time"][0]
CS_MASS = 132.905451961 * atomic_mass

CM3_MHZ = 1e-6 * 1e6  # 1 cm^3 * 1 MHz expressed in m^3/s

ROOM_TEMPERATURE = 294.0
ROOM_DENSITY = 3.1e16  # m^-3
CS_MELTING_POINT = 301.59

DENSITY_RANGE = (250.0, 400.0)

# (coupling beam diameter m, transit rate rad/s) measured at room temperature.
TRANSIT_ANCHORS = (
    (0.320e-3, 2 * pi * 94e3),
    (0.500e-3, 2 * pi * 60e3),
    (1.100e-3, 2 * pi * 27e3),
)


@dataclass(frozen=True)
class GasParams:
    """Collision parameters for Rydberg / ground-state perturber scattering.

    polarizability : ground-state polarizability of the perturber (a0^3)
    s_wave_length : electron-perturber s-wave scattering length (a0)
    mass : perturber mass (kg)
    effective_n : effective principal quantum number of the Rydberg level
    """

    polarizability: float = 402.0
    s_wave_length: float = -16.6
    mass: float = CS_MASS
    effective_n: float = 49.5

    def __post_init__(self):
        if self.polarizability <= 0:
            raise ValidationError("polarizability must be > 0")
        if self.effective_n <= 1:
            raise ValidationError("effective_n must be > 1")
        if self.mass <= 0:
            raise ValidationError("mass must be > 0")


CS_52D = GasParams()


def _positive(**values):
    for name, v in values.items():
        if not np.all(np.asarray(v) > 0):
            raise ValidationError(f"{name} must be > 0")


def _vapor_pressure_pa(T):
    """Cs saturated vapor pressure (Pa), Alcock-Itkin-Horrigan correlation.

    The liquid branch is scaled to join the solid branch continuously at the
    melting point.
    """
    T = np.asarray(T, dtype=float)
    solid = 10.0 ** (4.711 - 3999.0 / T)
    join = 10.0 ** ((4.711 - 3999.0 / CS_MELTING_POINT) - (4.165 - 3830.0 / CS_MELTING_POINT))
    liquid = join * 10.0 ** (4.165 - 3830.0 / T)
    return 101325.0 * np.where(T < CS_MELTING_POINT, solid, liquid)


def _raw_density(T):
    return _vapor_pressure_pa(T) / (Boltzmann * np.asarray(T, dtype=float))


_DENSITY_SCALE = ROOM_DENSITY / float(_raw_density(ROOM_TEMPERATURE))


def cs_density(temperature):
    """Saturated Cs number density (m^-3), pinned to 3.1e10 cm^-3 at 294 K."""
    T = np.asarray(temperature, dtype=float)
    lo, hi = DENSITY_RANGE
    if np.any(T < lo) or np.any(T > hi):
        raise ValidationError(f"temperature outside {lo:g}-{hi:g} K")
    n = _DENSITY_SCALE * _raw_density(T)
    return float(n) if n.ndim == 0 else n


def mean_speed(temperature, mass=CS_MASS):
    """Mean thermal speed sqrt(8kT/(pi m)) in m/s."""
    _positive(temperature=temperature, mass=mass)
    return np.sqrt(8 * Boltzmann * np.asarray(temperature) / (pi * mass))


def rms_speed(temperature, mass=CS_MASS):
    _positive(temperature=temperature, mass=mass)
    return np.sqrt(3 * Boltzmann * np.asarray(temperature) / mass)


def relative_speed(temperature, mass=CS_MASS):
    """Mean relative speed of two like atoms, sqrt(2) times the mean speed."""
    return np.sqrt(2.0) * mean_speed(temperature, mass)


SPEED_CONVENTIONS = {"mean": mean_speed, "rms": rms_speed, "relative": relative_speed}


def collision_speed(temperature, mass=CS_MASS, convention="relative"):
    try:
        return SPEED_CONVENTIONS[convention](temperature, mass)
    except KeyError:
        raise ValidationError(f"unknown speed convention {convention!r}") from None


def elastic_coefficient(gas: GasParams = CS_52D, temperature=ROOM_TEMPERATURE, convention="relative"):
    """Elastic broadening per density, 7.18 (alpha^2 v)^(1/3), in cm^3 MHz.

    Evaluated in atomic units; ``convention`` selects which thermal speed
    stands in for the collision velocity.
    """
    v_au = collision_speed(temperature, gas.mass, convention) / AU_VELOCITY
    coeff_au = 7.18 * (gas.polarizability**2 * v_au) ** (1.0 / 3.0)
    si = coeff_au * A0**3 / AU_TIME  # m^3/s
    return si / CM3_MHZ


def inelastic_coefficient(gas: GasParams = CS_52D):
    """Inelastic broadening per density, 8 e^2 a_s^2 / (4 pi eps0 h n*), in cm^3 MHz."""
    a_s = gas.s_wave_length * A0
    si = 8 * e**2 * a_s**2 / (4 * pi * epsilon_0 * h * gas.effective_n)
    return si / CM3_MHZ


def elastic_collision_rate(density, gas: GasParams = CS_52D, temperature=ROOM_TEMPERATURE,
                           convention="relative"):
    """Elastic collisional broadening (rad/s) at ground-state ``density`` (m^-3)."""
    if np.any(np.asarray(density) < 0):
        raise ValidationError("density must be >= 0")
    _positive(temperature=temperature)
    hz = elastic_coefficient(gas, temperature, convention) * CM3_MHZ * np.asarray(density)
    return 2 * pi * hz


def inelastic_collision_rate(density, gas: GasParams = CS_52D):
    """Inelastic (electron-perturber) broadening (rad/s)."""
    if np.any(np.asarray(density) < 0):
        raise ValidationError("density must be >= 0")
    return 2 * pi * inelastic_coefficient(gas) * CM3_MHZ * np.asarray(density)


def collisional_rate(density, gas: GasParams = CS_52D, temperature=ROOM_TEMPERATURE,
                     convention="relative"):
    return (elastic_collision_rate(density, gas, temperature, convention)
            + inelastic_collision_rate(density, gas))


def collision_cross_section(rate_per_density, speed):
    """Cross-section (cm^2) from a broadening coefficient (cm^3 MHz) and a speed (m/s).

    Uses Gamma = sigma * v * rho.
    """
    _positive(rate_per_density=rate_per_density, speed=speed)
    cm3_per_s = np.asarray(rate_per_density) * 1e6
    return cm3_per_s / (np.asarray(speed) * 100.0)


def _naive_transit(beam_diameter, temperature, mass):
    return np.sqrt(2.0) * mean_speed(temperature, mass) / np.asarray(beam_diameter)


def _fit_transit_constant():
    # geometric-mean ratio = least squares in log space over the anchors
    logs = [np.log(rate / _naive_transit(d, ROOM_TEMPERATURE, CS_MASS)) for d, rate in TRANSIT_ANCHORS]
    return float(np.exp(np.mean(logs)))


TRANSIT_CONSTANT = _fit_transit_constant()


def transit_broadening(beam_diameter, temperature=ROOM_TEMPERATURE, mass=CS_MASS):
    """Transit-time broadening (rad/s) for a beam of the given diameter (m).

    ``TRANSIT_CONSTANT * sqrt(2) * v_mean / d``; the constant is fixed once
    from the measured three-diameter series.
    """
    _positive(beam_diameter=beam_diameter, temperature=temperature, mass=mass)
    return TRANSIT_CONSTANT * _naive_transit(beam_diameter, temperature, mass)


DEFAULT_LASER = 2 * pi * 70e3
DEFAULT_MAGNETIC = 2 * pi * 50e3
DEFAULT_RYDBERG_RYDBERG = 0.0


def assemble_budget(conditions, gas: GasParams = CS_52D, overrides=None, assignment=None) -> DephasingBudget:
    """Build a :class:`DephasingBudget` for the given cell conditions.

    Transit broadening is set by the smaller of the two beams, collisional
    broadening by the ground-state density. ``overrides`` may replace any
    term by name (rad/s).
    """
    overrides = dict(overrides or {})
    unknown = set(overrides) - {"transit", "collisional", "laser", "magnetic", "rydberg_rydberg"}
    if unknown:
        raise ValidationError(f"unknown budget overrides {sorted(unknown)}")
    rates = {
        "laser": DEFAULT_LASER,
        "magnetic": DEFAULT_MAGNETIC,
        "rydberg_rydberg": DEFAULT_RYDBERG_RYDBERG,
    }
    if "transit" not in overrides:
        d = min(conditions.probe_diameter, conditions.coupling_diameter)
        rates["transit"] = float(transit_broadening(d, conditions.temperature, gas.mass))
    if "collisional" not in overrides:
        rates["collisional"] = float(collisional_rate(conditions.density, gas, conditions.temperature))
    rates.update({k: float(v) for k, v in overrides.items()})
    return DephasingBudget(assignment=assignment, **rates)
