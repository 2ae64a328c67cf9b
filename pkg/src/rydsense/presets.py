"""Cesium level data and ready-made ladder schemes.

Rates are angular (rad/s). Rydberg decay rates include blackbody-induced
transfer. Decays not routed explicitly go to the ground state.
"""
from __future__ import annotations

from math import pi, sqrt

from scipy.constants import physical_constants

from .core import Coupling, LadderScheme, Level

TWO_PI = 2 * pi
E_A0 = physical_constants["atomic unit of electric dipole mom."][0]

GAMMA_6P32 = TWO_PI * 5.2e6
GAMMA_6P12 = TWO_PI * 4.575e6
GAMMA_9S12 = 1.0 / 160e-9
GAMMA_52D52 = TWO_PI * 3.4e3
GAMMA_53P32 = TWO_PI * 1.6e3

LAMBDA_PROBE = 852.347e-9      # 6S1/2 -> 6P3/2
LAMBDA_COUPLING = 509.4e-9     # 6P3/2 -> 52D5/2
LAMBDA_D1 = 894.593e-9         # 6S1/2 -> 6P1/2
LAMBDA_6P12_9S = 635.63e-9     # 6P1/2 -> 9S1/2
LAMBDA_9S_53P = 2246.7e-9      # 9S1/2 -> 53P3/2
RF_FREQUENCY = 5.047e9         # 52D5/2 <-> 53P3/2

RF_DIPOLE = 1745 * E_A0        # 52D5/2 <-> 53P3/2, C m

# Effective probe dipoles for a vapor with F=4 holding 9/16 of the atoms and
# isotropic light; folding the population fraction into d^2 keeps the
# absorption formula single-species.
CS_D2_DIPOLE = sqrt(9 / 16 * 11 / 54) * 4.4786 * E_A0
CS_D1_DIPOLE = sqrt(9 / 16 / 3) * 3.1822 * E_A0


def k(wavelength: float) -> float:
    return TWO_PI / wavelength


def cs_three_level(probe_rabi, coupling_rabi, probe_detuning=0.0, coupling_detuning=0.0) -> LadderScheme:
    """6S1/2(F=4) -> 6P3/2(F'=5) -> 52D5/2, counterpropagating beams."""
    levels = (
        Level("6S1/2"),
        Level("6P3/2", GAMMA_6P32),
        Level("52D5/2", GAMMA_52D52, rydberg=True),
    )
    couplings = (
        Coupling(0, 1, probe_rabi, probe_detuning, k(LAMBDA_PROBE)),
        Coupling(1, 2, coupling_rabi, coupling_detuning, -k(LAMBDA_COUPLING)),
    )
    return LadderScheme(levels, couplings, probe_index=0)


def cs_four_level(probe_rabi, coupling_rabi, rf_rabi=0.0, probe_detuning=0.0,
                  coupling_detuning=0.0, rf_detuning=0.0) -> LadderScheme:
    """Three-level EIT ladder plus the RF-coupled 53P3/2 level."""
    levels = (
        Level("6S1/2"),
        Level("6P3/2", GAMMA_6P32),
        Level("52D5/2", GAMMA_52D52, rydberg=True),
        Level("53P3/2", GAMMA_53P32, rydberg=True),
    )
    couplings = (
        Coupling(0, 1, probe_rabi, probe_detuning, k(LAMBDA_PROBE)),
        Coupling(1, 2, coupling_rabi, coupling_detuning, -k(LAMBDA_COUPLING)),
        Coupling(2, 3, rf_rabi, rf_detuning, 0.0, "rf"),
    )
    return LadderScheme(levels, couplings, probe_index=0)


def cs_three_photon(probe_rabi, dressing_rabi, coupling_rabi, rf_rabi=0.0,
                    probe_detuning=TWO_PI * 500e6, dressing_detuning=-TWO_PI * 500e6,
                    coupling_detuning=TWO_PI * 5e3, rf_detuning=TWO_PI * 5e3) -> LadderScheme:
    """6S1/2 -> 6P1/2 -> 9S1/2 -> 53P3/2, RF to 52D5/2.

    Probe and coupling copropagate, the dressing beam counterpropagates, which
    nearly cancels the summed wavevector. 9S1/2 decays into 6P1/2.
    """
    levels = (
        Level("6S1/2"),
        Level("6P1/2", GAMMA_6P12),
        Level("9S1/2", GAMMA_9S12, decay_branches=((1, GAMMA_9S12),)),
        Level("53P3/2", GAMMA_53P32, rydberg=True),
        Level("52D5/2", GAMMA_52D52, rydberg=True),
    )
    couplings = (
        Coupling(0, 1, probe_rabi, probe_detuning, k(LAMBDA_D1)),
        Coupling(1, 2, dressing_rabi, dressing_detuning, -k(LAMBDA_6P12_9S)),
        Coupling(2, 3, coupling_rabi, coupling_detuning, k(LAMBDA_9S_53P)),
        Coupling(3, 4, rf_rabi, rf_detuning, 0.0, "rf"),
    )
    return LadderScheme(levels, couplings, probe_index=0)
