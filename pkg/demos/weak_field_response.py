"""Small-field response for three coupling beam sizes.

Smaller beams mean faster transit through the light, more dephasing, and a
flatter response near zero field. The last column turns each slope into the
smallest detectable field for a shot-noise limited 10 uW probe.

    python3 demos/weak_field_response.py
"""
import numpy as np

from rydsense.dephasing import CS_MASS, assemble_budget
from rydsense.presets import cs_four_level
from rydsense.sensing import min_detectable_field, photon_shot_noise_snr, transmission_noise_floor, weak_field_curve
from rydsense.spectroscopy import CellConditions, make_velocity_grid

MHZ = 2 * np.pi * 1e6

scheme = cs_four_level(1.7 * MHZ, 0.7 * MHZ)
grid = make_velocity_grid(294.0, CS_MASS, 2001)
fields = np.linspace(0, 0.1, 21)  # V/m, i.e. 0-1 mV/cm
floor = transmission_noise_floor(photon_shot_noise_snr(10e-6))

print(" beam (mm)  transit (kHz)  slope (%/(mV/cm))  E_min (uV/cm/rtHz)")
for d in (0.32e-3, 0.5e-3, 1.1e-3):
    cond = CellConditions(coupling_diameter=d)
    budget = assemble_budget(cond)
    curve = weak_field_curve(scheme, budget, cond, fields, grid)
    slope = np.polyfit(curve.fields[:5], curve.percent_change[:5], 1)[0] / 10
    emin = min_detectable_field(curve, floor) * 1e4
    print(f"{d * 1e3:10.2f} {budget.transit / 2e3 / np.pi:14.1f} {slope:18.2f} {emin:19.2f}")
