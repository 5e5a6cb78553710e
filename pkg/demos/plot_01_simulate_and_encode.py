"""
Simulated spectra and the forward model
=======================================

A spectrum is a sum of Lorentzian peaks on a 206-point grid, rescaled so its
maximum is 1.  A detector with K broadband channels sees only y = R x.
"""

import numpy as np

from specrecon.core import RngSeed, WavelengthGrid, encode, synthetic_response
from specrecon.simgen import SimConfig, generate_dataset, simulate_spectrum

###############################################################################
# One spectrum with three peaks.  The seed fully determines the draw.
cfg = SimConfig(m_peaks=3)
x, peaks = simulate_spectrum(cfg, RngSeed(0))
for p in peaks:
    print(f"mu={p.mu:6.1f}  gamma={p.gamma:5.2f}  I={p.intensity:.3f}")
print("max", x.values.max(), "argmax", int(np.argmax(x.values)))

###############################################################################
# The synthetic device: 16 smooth, overlapping channel responses.
R = synthetic_response(16, 206, seed=7, scale=1e-5)
print("R", R.entries.shape, "row maxima", R.entries.max(axis=1)[:4])

###############################################################################
# Encoding is a matrix-vector product; 206 unknowns become 16 readouts.
y = encode(R, x)
print("readouts", np.array2string(y.values, precision=3))

###############################################################################
# Index j maps to 400 + j nm for reporting.
nm = WavelengthGrid.nm()
print("peak locations (nm)", [float(nm.value(round(p.mu))) for p in peaks])

###############################################################################
# Datasets are lists of labelled pairs with per-sample seeds.
data = generate_dataset(SimConfig(m_peaks=(1, 3)), R, 5, RngSeed(1))
print([len(pair.x.values) for pair in data], [pair.y.values.shape for pair in data])
