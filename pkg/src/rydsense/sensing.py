"""Field measurement and sensitivity figures for Rydberg electrometry."""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import h, hbar

from .core import DephasingBudget, LadderScheme
from .dephasing import CS_MASS
from .errors import UnmeasurableError, ValidationError
from .presets import CS_D2_DIPOLE, E_A0, LAMBDA_PROBE, RF_FREQUENCY
from .spectroscopy import CellConditions, VelocityGrid, doppler_averaged_trace, make_velocity_grid

# Default detection chain: probe power on the detector, detector quantum
# efficiency, and the fraction of the detected light carrying the EIT signal.
DEFAULT_DETECTED_POWER = 10e-6
DEFAULT_QUANTUM_EFFICIENCY = 0.5
DEFAULT_EIT_FRACTION = 1e-3


@dataclass(frozen=True)
class RfTransition:
    """Rydberg-Rydberg transition driven by the RF field.

    dipole_moment is in units of e*a0, frequency in Hz.
    """

    dipole_moment: float = 1745.0
    frequency: float = RF_FREQUENCY

    def __post_init__(self):
        if not (self.dipole_moment > 0 and self.frequency > 0):
            raise ValidationError("dipole_moment and frequency must be > 0")

    @property
    def dipole_si(self) -> float:
        """Dipole moment in C m."""
        return self.dipole_moment * E_A0


CS_52D_53P = RfTransition()


def _nonnegative(name, value):
    arr = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise ValidationError(f"{name} must be finite and >= 0")
    return arr


def at_splitting_to_field(splitting, transition: RfTransition = CS_52D_53P):
    """RF field amplitude (V/m) from an Autler-Townes splitting (Hz), E = h*dnu/mu."""
    s = _nonnegative("splitting", splitting)
    out = h * s / transition.dipole_si
    return float(out) if out.ndim == 0 else out


def field_to_at_splitting(field_amplitude, transition: RfTransition = CS_52D_53P):
    """Autler-Townes splitting (Hz) produced by an RF field amplitude (V/m)."""
    f = _nonnegative("field", field_amplitude)
    out = transition.dipole_si * f / h
    return float(out) if out.ndim == 0 else out


def field_to_rabi(field_amplitude, transition: RfTransition = CS_52D_53P):
    """RF Rabi frequency (rad/s) mu*E/hbar."""
    f = _nonnegative("field", field_amplitude)
    out = transition.dipole_si * f / hbar
    return float(out) if out.ndim == 0 else out


def rabi_to_field(rabi, transition: RfTransition = CS_52D_53P):
    r = _nonnegative("rabi", rabi)
    out = hbar * r / transition.dipole_si
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class WeakFieldCurve:
    """On-resonance transmission change versus RF field.

    ``percent_change`` is ``100 * (T_RF - T_0) / T_0``; negative values mean
    the field reduces the probe transmission.
    """

    fields: np.ndarray       # V/m
    percent_change: np.ndarray
    transmission: np.ndarray | None = None

    def __post_init__(self):
        f = np.asarray(self.fields, dtype=float)
        p = np.asarray(self.percent_change, dtype=float)
        if f.shape != p.shape or f.ndim != 1:
            raise ValidationError("fields and percent_change must be 1D and equal length")
        object.__setattr__(self, "fields", f)
        object.__setattr__(self, "percent_change", p)

    def pairs(self) -> list:
        return list(zip(self.fields.tolist(), self.percent_change.tolist()))


def _rf_index(scheme: LadderScheme, rf_index):
    if rf_index is not None:
        return int(rf_index)
    for i, cp in enumerate(scheme.couplings):
        if cp.kind == "rf":
            return i
    raise ValidationError("scheme has no rf coupling")


def weak_field_curve(scheme: LadderScheme, budget: DephasingBudget, conditions: CellConditions,
                     field_grid, grid: VelocityGrid | None = None,
                     transition: RfTransition = CS_52D_53P, probe_dipole: float = CS_D2_DIPOLE,
                     rf_index=None, probe_detuning: float = 0.0, workers: int = 1) -> WeakFieldCurve:
    """Percentage change of the on-resonance probe transmission versus RF field.

    Every field sets the Rabi frequency of the rf coupling to ``mu*E/hbar``;
    transmission is Doppler-averaged at ``probe_detuning`` (rad/s). The
    reference ``T_0`` is the zero-field transmission, so ``E = 0`` maps to
    exactly zero.
    """
    fields = _nonnegative("field_grid", field_grid).ravel()
    if grid is None:
        grid = make_velocity_grid(conditions.temperature, CS_MASS)
    idx = _rf_index(scheme, rf_index)

    def transmission_at(e):
        sch = scheme.with_coupling(idx, rabi=field_to_rabi(e, transition))
        trace = doppler_averaged_trace(sch, budget, conditions, grid, [probe_detuning], probe_dipole)
        return float(trace.transmission[0])

    t0 = transmission_at(0.0)
    todo = [float(e) for e in fields]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ts = list(pool.map(lambda e: t0 if e == 0 else transmission_at(e), todo))
    else:
        ts = [t0 if e == 0 else transmission_at(e) for e in todo]
    ts = np.asarray(ts)
    return WeakFieldCurve(fields, 100.0 * (ts - t0) / t0, ts)


def _curve_arrays(curve):
    if isinstance(curve, WeakFieldCurve):
        return curve.fields, curve.percent_change
    arr = np.asarray(curve, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 2:
        return arr[:, 0], arr[:, 1]
    if arr.ndim == 2 and arr.shape[0] == 2:
        return arr[0], arr[1]
    raise ValidationError("curve must be a WeakFieldCurve or (field, change) pairs")


def slope_at_zero(curve) -> float:
    """Least-squares slope (% per V/m) over the smallest 20% of the field grid.

    At least three points are always used.
    """
    f, p = _curve_arrays(curve)
    if len(f) < 3:
        raise ValidationError("need at least 3 points for a slope")
    order = np.argsort(f, kind="stable")
    m = max(3, math.ceil(0.2 * len(f)))
    fs, ps = f[order][:m], p[order][:m]
    if np.ptp(fs) == 0:
        raise ValidationError("field values near zero are all identical")
    return float(np.polyfit(fs, ps, 1)[0])


def atom_shot_noise_limit(n_atoms, t2, transition: RfTransition = CS_52D_53P):
    """Projection-noise limited field sensitivity h / (mu sqrt(T2 N)) in V m^-1 Hz^-1/2."""
    n = np.asarray(n_atoms, dtype=float)
    t = np.asarray(t2, dtype=float)
    if np.any(n <= 0) or np.any(t <= 0):
        raise ValidationError("n_atoms and t2 must be > 0")
    out = h / (transition.dipole_si * np.sqrt(t * n))
    return float(out) if out.ndim == 0 else out


def photon_shot_noise_snr(power, quantum_efficiency=DEFAULT_QUANTUM_EFFICIENCY, bandwidth=1.0,
                          wavelength=LAMBDA_PROBE):
    """Photon-counting SNR sqrt(eta P / (2 h nu df)) of a shot-noise limited detector."""
    p = np.asarray(power, dtype=float)
    if np.any(p <= 0) or bandwidth <= 0 or wavelength <= 0:
        raise ValidationError("power, bandwidth and wavelength must be > 0")
    if not 0 < quantum_efficiency <= 1:
        raise ValidationError("quantum_efficiency must be in (0, 1]")
    nu = SPEED_OF_LIGHT / wavelength
    out = np.sqrt(quantum_efficiency * p / (2 * h * nu * bandwidth))
    return float(out) if out.ndim == 0 else out


def transmission_noise_floor(snr, eit_fraction=DEFAULT_EIT_FRACTION) -> float:
    """Resolvable transmission change (% per sqrt(Hz)).

    Only ``eit_fraction`` of the detected light carries the EIT signal, so a
    detector with amplitude SNR ``snr`` in 1 Hz resolves a relative change of
    ``1 / (snr * eit_fraction)`` in that part.
    """
    if snr <= 0 or not 0 < eit_fraction <= 1:
        raise ValidationError("snr must be > 0 and eit_fraction in (0, 1]")
    return 100.0 / (snr * eit_fraction)


def min_detectable_field(curve, noise_floor: float) -> float:
    """Field (V m^-1 Hz^-1/2) whose response equals ``noise_floor`` (% per sqrt(Hz))."""
    if noise_floor < 0:
        raise ValidationError("noise_floor must be >= 0")
    slope = slope_at_zero(curve)
    if slope == 0 or not np.isfinite(slope):
        raise UnmeasurableError("zero response slope near zero field")
    return noise_floor / abs(slope)


@dataclass(frozen=True)
class SensitivityReport:
    slope_at_zero: float          # % per (V/m)
    min_detectable_field: float   # V m^-1 Hz^-1/2
    atom_shot_limit: float        # V m^-1 Hz^-1/2
    photon_snr: float
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("min_detectable_field", "atom_shot_limit", "photon_snr"):
            if not getattr(self, name) >= 0:
                raise ValidationError(f"{name} must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)


def sensitivity_report(curve, n_atoms, t2, transition: RfTransition = CS_52D_53P,
                       power=DEFAULT_DETECTED_POWER, quantum_efficiency=DEFAULT_QUANTUM_EFFICIENCY,
                       bandwidth=1.0, wavelength=LAMBDA_PROBE, eit_fraction=DEFAULT_EIT_FRACTION,
                       config=None) -> SensitivityReport:
    """Bundle slope, detection floor and shot-noise limits for one weak-field curve."""
    snr = photon_shot_noise_snr(power, quantum_efficiency, bandwidth, wavelength)
    floor = transmission_noise_floor(snr, eit_fraction)
    snapshot = {
        "power_W": power, "quantum_efficiency": quantum_efficiency, "bandwidth_Hz": bandwidth,
        "wavelength_m": wavelength, "eit_fraction": eit_fraction, "n_atoms": n_atoms, "t2_s": t2,
        "dipole_moment_ea0": transition.dipole_moment, "rf_frequency_Hz": transition.frequency,
    }
    snapshot.update(config or {})
    return SensitivityReport(
        slope_at_zero=slope_at_zero(curve),
        min_detectable_field=min_detectable_field(curve, floor),
        atom_shot_limit=atom_shot_noise_limit(n_atoms, t2, transition),
        photon_snr=snr,
        config=snapshot,
    )
