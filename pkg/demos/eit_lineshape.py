"""EIT and Autler-Townes lineshapes in a room-temperature Cs cell.

Builds the 4-level ladder, averages over the thermal velocity distribution and
prints the transparency window with and without an RF field.

    python3 demos/eit_lineshape.py
"""
import numpy as np

from rydsense.dephasing import CS_MASS, assemble_budget
from rydsense.presets import cs_four_level
from rydsense.sensing import field_to_rabi
from rydsense.spectroscopy import CellConditions, doppler_averaged_trace, find_at_peaks, fwhm, make_velocity_grid

MHZ = 2 * np.pi * 1e6

cond = CellConditions()
budget = assemble_budget(cond)
grid = make_velocity_grid(cond.temperature, CS_MASS, 1001)
det = np.linspace(-10, 10, 401) * MHZ

print(f"relaxation budget (kHz): transit {budget.transit / 2e3 / np.pi:.0f}, "
      f"collisional {budget.collisional / 2e3 / np.pi:.1f}, laser {budget.laser / 2e3 / np.pi:.0f}")

bare = doppler_averaged_trace(cs_four_level(1.8 * MHZ, 0.5 * MHZ), budget, cond, grid, det)
print(f"no RF: peak T = {bare.transmission.max():.4f}, FWHM = {fwhm(bare) / 1e6:.2f} MHz")

# 3 mV/cm splits the window; in a thermal vapor the probe sees the splitting
# scaled by the coupling/probe wavelength ratio
rf = field_to_rabi(0.3)
dressed = doppler_averaged_trace(cs_four_level(1.8 * MHZ, 0.5 * MHZ, rf), budget, cond, grid, det)
peaks = find_at_peaks(dressed)
print(f"3 mV/cm: RF Rabi {rf / MHZ:.2f} MHz, observed splitting {peaks.splitting / 1e6:.2f} MHz "
      f"(ratio {peaks.splitting * 2 * np.pi / rf:.3f}, wavelength ratio {509.4 / 852.3:.3f})")

print("\n detuning (MHz)   T (no RF)   T (3 mV/cm)")
for i in range(0, len(det), 20):
    print(f"{det[i] / MHZ:14.1f} {bare.transmission[i]:11.4f} {dressed.transmission[i]:12.4f}")
