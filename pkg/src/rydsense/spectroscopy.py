"""Doppler-averaged probe spectra and lineshape analysis."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import Boltzmann
from scipy.signal import find_peaks

from .core import (
    DephasingBudget,
    LadderScheme,
    build_relaxation,
    coupling_matrix,
    cumulative_coefficients,
    detuning_diagonal,
    solve_batch,
    susceptibility,
)
from .errors import (
    DegenerateSteadyStateError,
    NoPeakError,
    SolverError,
    UnresolvedSplittingError,
    ValidationError,
)
from .presets import CS_D2_DIPOLE

DEFAULT_VELOCITY_POINTS = 4001
DEFAULT_VELOCITY_SPAN = 4.0

# Rounding slack allowed on the [0, 1] transmission range.
_T_SLACK = 1e-12

# Detuning rows per work item; fixed so results never depend on thread count.
_ROWS_PER_TASK = 8


@dataclass(frozen=True)
class VelocityGrid:
    nodes: np.ndarray
    weights: np.ndarray
    temperature: float = 0.0
    atomic_mass: float = 0.0

    @classmethod
    def doppler_free(cls) -> "VelocityGrid":
        """Single v = 0 class (zero-temperature limit)."""
        return cls(np.zeros(1), np.ones(1))


def thermal_width(temperature: float, mass: float) -> float:
    """1D rms velocity sqrt(kT/m)."""
    return float(np.sqrt(Boltzmann * temperature / mass))


def make_velocity_grid(temperature: float, mass: float, n_points: int = DEFAULT_VELOCITY_POINTS,
                       span: float = DEFAULT_VELOCITY_SPAN) -> VelocityGrid:
    """Trapezoid quadrature of the 1D Maxwell-Boltzmann distribution.

    Nodes are uniform on ``[-span, span] * sigma_v``; weights are normalized
    to sum to one.
    """
    if temperature <= 0 or mass <= 0:
        raise ValidationError("temperature and mass must be > 0")
    if n_points < 3 or n_points % 2 == 0:
        raise ValidationError("n_points must be odd and >= 3")
    if span < 3:
        raise ValidationError("span must be >= 3 thermal widths")
    sigma = thermal_width(temperature, mass)
    u = np.linspace(-span, span, n_points)
    w = np.exp(-0.5 * u**2)
    w[0] *= 0.5
    w[-1] *= 0.5
    # symmetrize exactly before normalizing
    w = 0.5 * (w + w[::-1])
    return VelocityGrid(u * sigma, w / w.sum(), float(temperature), float(mass))


@dataclass(frozen=True)
class CellConditions:
    temperature: float = 294.0
    density: float = 3.1e16
    length: float = 0.04
    probe_diameter: float = 1.36e-3
    coupling_diameter: float = 0.10e-3

    def __post_init__(self):
        for name in ("temperature", "density", "length", "probe_diameter", "coupling_diameter"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0")


@dataclass(frozen=True)
class SpectralTrace:
    """Probe transmission on a monotone detuning grid (rad/s).

    ``phase`` is the field phase (rad) picked up in the cell, so the complex
    field transmission is ``sqrt(transmission) * exp(1j * phase)``.
    ``optical_depth`` keeps ``-ln T`` when it is known, which stays finite in
    opaque regions where the transmission underflows to zero.
    """

    detunings: np.ndarray
    transmission: np.ndarray
    phase: np.ndarray | None = None
    optical_depth: np.ndarray | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        d = np.asarray(self.detunings, dtype=float)
        t = np.asarray(self.transmission, dtype=float)
        if d.shape != t.shape or d.ndim != 1:
            raise ValidationError("detunings and transmission must be 1D and equal length")
        if len(d) > 1 and not (np.all(np.diff(d) > 0) or np.all(np.diff(d) < 0)):
            raise ValidationError("detuning grid must be strictly monotone")
        if np.any(~np.isfinite(t)) or np.any(t < -_T_SLACK) or np.any(t > 1 + _T_SLACK):
            raise ValidationError("transmission must lie in [0, 1]")
        object.__setattr__(self, "detunings", d)
        object.__setattr__(self, "transmission", t)
        for name in ("phase", "optical_depth"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if v.shape != d.shape:
                    raise ValidationError(f"{name} must match the detuning grid")
                object.__setattr__(self, name, v)

    @property
    def complex_transmission(self) -> np.ndarray:
        phase = self.phase if self.phase is not None else 0.0
        return np.sqrt(self.transmission) * np.exp(1j * phase)

    def rescaled(self, gain: float, offset: float) -> "SpectralTrace":
        """Affine map of the transmission; phase and optical depth are dropped."""
        return SpectralTrace(self.detunings, gain * self.transmission + offset, metadata=self.metadata)

    def signal(self, quantity: str = "transmission") -> np.ndarray:
        """Transmission, or ``-optical_depth`` for ``quantity="absorbance"``.

        Both put the EIT feature as a peak.
        """
        if quantity == "transmission":
            return self.transmission
        if quantity == "absorbance":
            if self.optical_depth is not None:
                return -self.optical_depth
            with np.errstate(divide="ignore"):
                od = -np.log(self.transmission)
            if not np.all(np.isfinite(od)):
                raise ValidationError("opaque trace without stored optical depth")
            return -od
        raise ValidationError(f"unknown quantity {quantity!r}")


def doppler_averaged_chi(scheme: LadderScheme, budget: DephasingBudget, density: float,
                         grid: VelocityGrid, detuning_grid, probe_dipole: float = CS_D2_DIPOLE,
                         workers: int = 1) -> np.ndarray:
    """Velocity-averaged probe susceptibility at each probe detuning.

    Each velocity class is an independent absorber; the susceptibility (hence
    the absorption coefficient) is averaged, never the transmission.
    """
    detunings = np.asarray(detuning_grid, dtype=float)
    p = scheme.probe
    base = scheme.with_coupling(scheme.probe_index, detuning=0.0)
    unit = np.zeros(len(scheme.couplings))
    unit[scheme.probe_index] = 1.0
    sensitivity = cumulative_coefficients(scheme, unit)
    d0 = detuning_diagonal(base, grid.nodes)  # (nv, n)
    H_off = coupling_matrix(scheme)
    L = build_relaxation(scheme, budget)
    weights = np.asarray(grid.weights)

    def task(start):
        rows = detunings[start:start + _ROWS_PER_TASK]
        diag = d0[None, :, :] + rows[:, None, None] * sensitivity[None, None, :]
        try:
            rho = solve_batch(H_off, L, diag)
        except DegenerateSteadyStateError as exc:
            raise SolverError(str(exc), detuning=float(rows[0]), velocity=float(grid.nodes[0])) from exc
        chi = susceptibility(rho[..., p.upper, p.lower], scheme, density, probe_dipole)
        return np.sum(chi * weights[None, :], axis=1)

    starts = range(0, len(detunings), _ROWS_PER_TASK)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(task, starts))
    else:
        parts = [task(s) for s in starts]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)


def doppler_averaged_trace(scheme: LadderScheme, budget: DephasingBudget, conditions: CellConditions,
                           grid: VelocityGrid, detuning_grid, probe_dipole: float = CS_D2_DIPOLE,
                           workers: int = 1) -> SpectralTrace:
    """Probe transmission ``exp(-<alpha> L)`` over a probe-detuning grid (rad/s)."""
    chi = doppler_averaged_chi(scheme, budget, conditions.density, grid, detuning_grid,
                               probe_dipole, workers)
    kp = abs(scheme.probe.wavevector)
    if kp == 0:
        raise ValidationError("probe coupling needs a nonzero wavevector")
    alpha = kp * chi.imag
    phase = 0.5 * kp * chi.real * conditions.length
    od = alpha * conditions.length
    meta = {"conditions": conditions, "velocity_points": len(grid.nodes)}
    return SpectralTrace(np.asarray(detuning_grid, dtype=float), np.exp(-od), phase, od, meta)


def _baseline(y: np.ndarray) -> tuple:
    k = max(1, int(round(0.05 * len(y))))
    outer = np.concatenate([y[:k], y[-k:]])
    return float(np.median(outer)), float(np.std(outer))


def fwhm_of(detunings, values) -> float:
    """Full width at half maximum (Hz) of the dominant peak of ``values``.

    The baseline is the median of the outer 10% of samples (5% per side);
    the half-maximum crossings are linearly interpolated.
    """
    x = np.asarray(detunings, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(y) < 5 or x.shape != y.shape:
        raise NoPeakError("trace too short")
    base, spread = _baseline(y)
    s = y - base
    i = int(np.argmax(s))
    peak = s[i]
    floor = max(3 * spread, 1e-12 * float(np.max(np.abs(y))))
    if peak <= floor:
        raise NoPeakError("no peak above the baseline noise floor")
    half = 0.5 * peak

    left = i
    while left > 0 and s[left] >= half:
        left -= 1
    right = i
    while right < len(s) - 1 and s[right] >= half:
        right += 1
    if s[left] >= half or s[right] >= half:
        raise NoPeakError("peak is not contained in the trace")

    def cross(a, b):
        return x[a] + (half - s[a]) * (x[b] - x[a]) / (s[b] - s[a])

    width = abs(cross(right - 1, right) - cross(left, left + 1))
    return width / (2 * np.pi)


def fwhm(trace: SpectralTrace, quantity: str = "transmission") -> float:
    """FWHM (Hz) of the EIT peak in the transmission or in ``-optical_depth``."""
    return fwhm_of(trace.detunings, trace.signal(quantity))


@dataclass(frozen=True)
class ATPeaks:
    peak1: float
    peak2: float
    splitting: float  # Hz


def _vertex(x, y, i):
    if i <= 0 or i >= len(y) - 1:
        return x[i]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2 * y1 + y2
    if denom == 0:
        return x[i]
    offset = 0.5 * (y0 - y2) / denom
    # uniform spacing assumed locally
    return x[i] + offset * 0.5 * (x[i + 1] - x[i - 1])


def at_peaks_of(detunings, values, min_depth: float = 0.05) -> ATPeaks:
    """Locate an Autler-Townes doublet in ``values`` sampled on ``detunings``.

    Heights are measured from the minimum. The two most prominent local
    maxima form the doublet; the minimum between them must sit at least
    ``min_depth`` (fraction of the smaller peak height) below the smaller peak.
    """
    x = np.asarray(detunings, dtype=float)
    y = np.asarray(values, dtype=float)
    span = float(np.max(y) - np.min(y))
    if not span > 0:
        raise UnresolvedSplittingError("flat trace")
    yn = (y - np.min(y)) / span
    idx, props = find_peaks(yn, prominence=1e-9)
    if len(idx) < 2:
        raise UnresolvedSplittingError("fewer than two local maxima")
    top = np.sort(idx[np.argsort(props["prominences"], kind="stable")[-2:]])
    a, b = int(top[0]), int(top[1])
    smaller = min(yn[a], yn[b])
    valley = float(np.min(yn[a:b + 1]))
    if smaller <= 0 or (smaller - valley) < min_depth * smaller:
        raise UnresolvedSplittingError("doublet is not resolved")
    p1, p2 = _vertex(x, yn, a), _vertex(x, yn, b)
    return ATPeaks(float(p1), float(p2), float(abs(p2 - p1) / (2 * np.pi)))


def find_at_peaks(trace: SpectralTrace, min_depth: float = 0.05,
                  quantity: str = "transmission") -> ATPeaks:
    """Autler-Townes doublet in the transmission or in ``-optical_depth``."""
    return at_peaks_of(trace.detunings, trace.signal(quantity), min_depth)
