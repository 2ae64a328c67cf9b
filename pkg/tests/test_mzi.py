import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rydsense.errors import UndefinedSNRError, ValidationError
from rydsense.mzi import (
    InterferometerConfig,
    NoiseBudget,
    homodyne_signal,
    output_powers,
    phase_noise_floor,
    snr_comparison,
)
from rydsense.spectroscopy import SpectralTrace


def eit_like_trace(depth=0.04, base=0.16):
    x = np.linspace(-10, 10, 401) * 2 * np.pi * 1e6
    t = base * (1 + depth / (1 + (x / (2 * np.pi * 0.85e6)) ** 2))
    phase = 0.3 + 0.02 * x / (2 * np.pi * 1e6) / (1 + (x / (2 * np.pi * 0.85e6)) ** 2)
    return SpectralTrace(x, t, phase)


amplitudes = st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False)


@settings(max_examples=300, deadline=None)
@given(amplitudes, st.floats(0.01, 0.99), st.floats(0.1, 100), st.floats(-7, 7))
def test_combiner_conserves_energy(t, r, R, phi):
    cfg = InterferometerConfig(lo_signal_ratio=R, splitter_ratio=r, path_phase=phi)
    p1, p2 = output_powers(t, cfg, power=2.0)
    assert p1 + p2 == pytest.approx(2.0 * (R + abs(t) ** 2), rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(amplitudes, st.floats(0.01, 0.99), st.floats(0.1, 100), st.floats(-7, 7))
def test_homodyne_formula_matches_port_difference(t, r, R, phi):
    cfg = InterferometerConfig(lo_signal_ratio=R, splitter_ratio=r, path_phase=phi)
    p1, p2 = output_powers(t, cfg, power=1.5)
    assert homodyne_signal(t, cfg, power=1.5) == pytest.approx(p1 - p2, rel=1e-9, abs=1e-9 * R)


def test_common_mode_rejection_for_balanced_splitter():
    cfg = InterferometerConfig(splitter_ratio=0.5, path_phase=np.pi / 2)
    # with the signal arm blocked the difference signal vanishes exactly
    assert homodyne_signal(0.0, cfg, power=1.0) == 0.0
    # LO intensity noise does not enter the balanced difference
    noisy = InterferometerConfig(lo_signal_ratio=25.0, splitter_ratio=0.5)
    assert homodyne_signal(0.0, noisy) == 0.0
    imbalanced = InterferometerConfig(splitter_ratio=0.6)
    assert homodyne_signal(0.0, imbalanced) != 0.0


def test_signal_gain_scales_as_sqrt_lo_ratio():
    t = 0.4
    s1 = homodyne_signal(t, InterferometerConfig(lo_signal_ratio=4.0))
    s2 = homodyne_signal(t, InterferometerConfig(lo_signal_ratio=16.0))
    assert s2 / s1 == pytest.approx(2.0)


def test_phase_noise_floor_conventions():
    pn = phase_noise_floor(0.4e-9, 795e-9)
    assert pn.phase_rad == pytest.approx(2 * np.pi * 0.4e-9 / 795e-9)
    assert pn.fractional == pytest.approx(8.0e-5, rel=0.01)
    with pytest.raises(ValidationError):
        phase_noise_floor(-1.0, 795e-9)


def test_config_validation():
    with pytest.raises(ValidationError):
        InterferometerConfig(splitter_ratio=1.0)
    with pytest.raises(ValidationError):
        InterferometerConfig(lo_signal_ratio=0.0)
    with pytest.raises(ValidationError):
        NoiseBudget(quantum_efficiency=0.0)
    with pytest.raises(ValidationError):
        output_powers(1.5, InterferometerConfig())


def test_snr_undefined_without_noise():
    quiet = NoiseBudget(probe_relative_intensity_noise=0.0, detector_nep=0.0, shot_noise=False)
    cfg = InterferometerConfig(phase_stability_rms=0.0)
    with pytest.raises(UndefinedSNRError):
        snr_comparison(eit_like_trace(), cfg, quiet)


def test_enhancement_grows_with_probe_rin():
    trace = eit_like_trace()
    cfg = InterferometerConfig()
    e = [snr_comparison(trace, cfg, NoiseBudget(probe_relative_intensity_noise=r)).enhancement
         for r in (1e-5, 1e-4, 1e-3)]
    assert e[0] < e[1] < e[2]


def test_shot_limited_enhancement_near_unity():
    trace = eit_like_trace()
    cfg = InterferometerConfig(lo_signal_ratio=20.0, phase_stability_rms=0.0)
    shot_only = NoiseBudget(probe_relative_intensity_noise=0.0, detector_nep=0.0)
    res = snr_comparison(trace, cfg, shot_only)
    # signal gain sqrt(R) is matched by the LO shot noise
    assert res.enhancement == pytest.approx(1.0, rel=0.1)


def test_interference_extremes_and_gain():
    R = 20.0
    assert homodyne_signal(1.0, InterferometerConfig(lo_signal_ratio=R, path_phase=np.pi / 2)) == pytest.approx(
        0.0, abs=1e-12)
    assert homodyne_signal(1.0, InterferometerConfig(lo_signal_ratio=R)) == pytest.approx(2 * np.sqrt(R))
    cfg = InterferometerConfig(lo_signal_ratio=R)
    t, dt = 0.4, 1e-6
    gain = (homodyne_signal(t + dt, cfg) - homodyne_signal(t, cfg)) / dt
    direct = ((t + dt) ** 2 - t**2) / dt
    assert gain == pytest.approx(2 * np.sqrt(R))
    assert gain / direct == pytest.approx(np.sqrt(R) / t, rel=1e-5)


def test_signal_odd_about_balanced_point():
    for x in (0.1, 0.7, 1.3):
        up = homodyne_signal(0.6, InterferometerConfig(path_phase=np.pi / 2 + x))
        down = homodyne_signal(0.6, InterferometerConfig(path_phase=np.pi / 2 - x))
        assert up == pytest.approx(-down)


def test_phase_noise_examples():
    assert phase_noise_floor(0.4e-9, 795e-9).phase_rad == pytest.approx(3.16e-3, rel=1e-2)
    assert phase_noise_floor(0.0, 795e-9) == (0.0, 0.0)


def test_shot_only_reduces_to_photon_counting():
    from rydsense.sensing import photon_shot_noise_snr

    trace = eit_like_trace()
    noise = NoiseBudget(probe_relative_intensity_noise=0.0, detector_nep=0.0)
    res = snr_comparison(trace, InterferometerConfig(phase_stability_rms=0.0), noise)
    P = noise.probe_power
    k = 20  # outer 5% of 401 points per side
    base = np.median(np.concatenate([trace.transmission[:k], trace.transmission[-k:]]))
    excursion = np.max(np.abs(trace.transmission - base))
    expected = excursion / base * photon_shot_noise_snr(P * base, noise.quantum_efficiency)
    assert res.snr_direct == pytest.approx(expected, rel=0.01)
