"""Mach-Zehnder homodyne readout of the probe field.

The probe is split into a signal arm (through the vapor cell) and a local
oscillator (LO) arm with ``lo_signal_ratio`` times the signal power. A second
beam splitter recombines them and a balanced detector records the difference
of the two output ports.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import h

from .errors import UndefinedSNRError, ValidationError
from .presets import LAMBDA_PROBE
from .spectroscopy import SpectralTrace, _baseline

INTERFEROMETER_STABILITY = 0.4e-9  # path-length stability of the locked MZI, m
REFERENCE_WAVELENGTH = 795e-9


class PhaseNoise(NamedTuple):
    phase_rad: float
    fractional: float


def phase_noise_floor(stability_rms_length: float, wavelength: float) -> PhaseNoise:
    """Phase jitter from a path-length jitter.

    Returns ``2*pi*ds/lambda`` in radians together with the fractional figure
    ``ds/(2*pi*lambda)`` often quoted for interferometer stability.
    """
    if stability_rms_length < 0 or wavelength <= 0:
        raise ValidationError("stability must be >= 0 and wavelength > 0")
    return PhaseNoise(2 * np.pi * stability_rms_length / wavelength,
                      stability_rms_length / (2 * np.pi * wavelength))


@dataclass(frozen=True)
class InterferometerConfig:
    """Combiner geometry and operating point.

    ``path_phase`` is the LO phase (rad). ``phase_stability_rms`` is the rms
    phase excursion of the lock, by default the probe-wavelength equivalent of
    a 0.4 nm path jitter.
    """

    lo_signal_ratio: float = 20.0
    splitter_ratio: float = 0.5
    path_phase: float = 0.0
    phase_stability_rms: float = phase_noise_floor(INTERFEROMETER_STABILITY, LAMBDA_PROBE).phase_rad

    def __post_init__(self):
        if not self.lo_signal_ratio > 0:
            raise ValidationError("lo_signal_ratio must be > 0")
        if not 0 < self.splitter_ratio < 1:
            raise ValidationError("splitter_ratio must be in (0, 1)")
        if not self.phase_stability_rms >= 0:
            raise ValidationError("phase_stability_rms must be >= 0")
        if not np.isfinite(self.path_phase):
            raise ValidationError("path_phase must be finite")


@dataclass(frozen=True)
class NoiseBudget:
    """White noise densities referred to a 1 Hz detection bandwidth.

    probe_relative_intensity_noise : fractional power noise per sqrt(Hz)
    detector_nep : detector noise-equivalent power, W/sqrt(Hz)
    coupling_am_noise : extra noise as a fraction of the EIT signal
    probe_power : probe power entering the signal arm, W
    Laser linewidths are carried for bookkeeping; their dephasing enters
    through the relaxation budget, not here.
    """

    probe_relative_intensity_noise: float = 2.5e-4
    probe_linewidth: float = 50e3
    coupling_linewidth: float = 50e3
    reference_linewidth: float = 300e3
    detector_nep: float = 1e-12
    coupling_am_noise: float = 0.0
    probe_power: float = 10e-6
    quantum_efficiency: float = 0.5
    bandwidth: float = 1.0
    wavelength: float = LAMBDA_PROBE
    shot_noise: bool = True

    def __post_init__(self):
        for name in ("probe_relative_intensity_noise", "probe_linewidth", "coupling_linewidth",
                     "reference_linewidth", "detector_nep", "coupling_am_noise"):
            if not getattr(self, name) >= 0:
                raise ValidationError(f"{name} must be >= 0")
        if not (self.probe_power > 0 and self.bandwidth > 0 and self.wavelength > 0):
            raise ValidationError("probe_power, bandwidth and wavelength must be > 0")
        if not 0 < self.quantum_efficiency <= 1:
            raise ValidationError("quantum_efficiency must be in (0, 1]")

    def shot(self, detected_power):
        """Shot-noise equivalent power (W) in the detection bandwidth."""
        if not self.shot_noise:
            return 0.0 * detected_power
        hnu = h * SPEED_OF_LIGHT / self.wavelength
        return np.sqrt(2 * hnu * detected_power * self.bandwidth / self.quantum_efficiency)


def _amplitude(t):
    t = np.asarray(t, dtype=complex)
    if np.any(np.abs(t) > 1 + 1e-12):
        raise ValidationError("|signal_transmission| must be <= 1")
    return t


def output_powers(signal_transmission, config: InterferometerConfig, power: float = 1.0):
    """Powers at the two combiner ports for signal-arm input ``power``.

    LO field ``sqrt(R P) exp(i phi)``, signal field ``t sqrt(P)``; the
    combiner maps (LO, signal) to ``(sqrt(r) LO + sqrt(1-r) s,
    sqrt(1-r) LO - sqrt(r) s)``, which is unitary.
    """
    t = _amplitude(signal_transmission)
    r = config.splitter_ratio
    lo = np.sqrt(config.lo_signal_ratio * power) * np.exp(1j * config.path_phase)
    s = t * np.sqrt(power)
    e1 = np.sqrt(r) * lo + np.sqrt(1 - r) * s
    e2 = np.sqrt(1 - r) * lo - np.sqrt(r) * s
    return np.abs(e1) ** 2, np.abs(e2) ** 2


def homodyne_signal(signal_transmission, config: InterferometerConfig, power: float = 1.0):
    """Balanced-detector difference signal (W for ``power`` in W).

    ``(2r-1) P (R - |t|^2) + 4 sqrt(r(1-r)) sqrt(R) P |t| cos(phi - arg t)``;
    for a 50-50 combiner only the interference term survives.
    """
    t = _amplitude(signal_transmission)
    r, R = config.splitter_ratio, config.lo_signal_ratio
    dc = (2 * r - 1) * power * (R - np.abs(t) ** 2)
    fringe = 4 * np.sqrt(r * (1 - r)) * np.sqrt(R) * power * np.abs(t) * np.cos(config.path_phase - np.angle(t))
    out = dc + fringe
    return float(out) if np.ndim(out) == 0 else out


class SNRComparison(NamedTuple):
    snr_direct: float
    snr_mzi: float
    enhancement: float


def _feature(y):
    base, _ = _baseline(y)
    return base, float(np.max(np.abs(y - base)))


def snr_comparison(eit_trace: SpectralTrace, config: InterferometerConfig,
                   noise: NoiseBudget) -> SNRComparison:
    """SNR of the EIT feature with direct detection versus the MZI.

    The signal is the largest excursion of the detected quantity from its
    baseline. Noise is evaluated at the baseline operating point and summed
    in quadrature:

    direct : probe RIN, shot noise and detector NEP on the transmitted power
    MZI    : RIN leaking through splitter imbalance, phase jitter to second
             order, shot noise on both ports, detector NEP

    ``config.path_phase`` is taken relative to the baseline phase of the
    signal field, so 0 reads out the amplitude and pi/2 the phase.
    """
    P = noise.probe_power
    t = eit_trace.complex_transmission
    base_T, sig_T = _feature(P * eit_trace.transmission)
    t_bg = np.sqrt(base_T / P) * np.exp(1j * _baseline(np.unwrap(np.angle(t)))[0])

    locked = InterferometerConfig(config.lo_signal_ratio, config.splitter_ratio,
                                  config.path_phase + float(np.angle(t_bg)), config.phase_stability_rms)
    d = homodyne_signal(t, locked, P)
    _, sig_m = _feature(d)

    rin = noise.probe_relative_intensity_noise
    am = noise.coupling_am_noise
    bw = np.sqrt(noise.bandwidth)
    r, R = config.splitter_ratio, config.lo_signal_ratio
    T_bg = abs(t_bg) ** 2

    n_direct = np.sqrt((rin * base_T * bw) ** 2 + noise.shot(base_T) ** 2
                       + (noise.detector_nep * bw) ** 2 + (am * sig_T) ** 2)

    fringe = 4 * np.sqrt(r * (1 - r) * R) * P * abs(t_bg)
    dphi = config.phase_stability_rms
    first = fringe * abs(np.sin(config.path_phase)) * dphi
    second = fringe * abs(np.cos(config.path_phase)) * dphi**2 / np.sqrt(2)
    imbalance = rin * abs(2 * r - 1) * P * (R + T_bg) * bw
    n_mzi = np.sqrt(imbalance**2 + first**2 + second**2 + noise.shot(P * (R + T_bg)) ** 2
                    + (noise.detector_nep * bw) ** 2 + (am * sig_m) ** 2)

    if n_direct == 0 and n_mzi == 0:
        raise UndefinedSNRError("both channels are noiseless")
    snr_d = sig_T / n_direct if n_direct > 0 else np.inf
    snr_m = sig_m / n_mzi if n_mzi > 0 else np.inf
    return SNRComparison(float(snr_d), float(snr_m), float(snr_m / snr_d))
