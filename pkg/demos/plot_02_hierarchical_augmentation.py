"""
Hierarchical data augmentation
==============================

Each simulated spectrum is encoded through S perturbed copies of R, and each
of those readouts receives T draws of rectified Gaussian noise, giving S*T
training pairs per spectrum.
"""

import numpy as np

from specrecon.core import RngSeed, encode, synthetic_response
from specrecon.hda import HdaConfig, augment, perturb_response
from specrecon.simgen import SimConfig, simulate_spectrum

R = synthetic_response(seed=7, scale=1e-5)
x, _ = simulate_spectrum(SimConfig(m_peaks=2), RngSeed(3))

###############################################################################
# Defaults: S=2, T=4, alpha=0.05, sigma_eps=1e-5.
cfg = HdaConfig()
pairs = augment(x, R, cfg, RngSeed(11))
print(len(pairs), "pairs")
y0 = encode(R, x).values
for pair, rec in pairs:
    rel = np.abs(pair.y.values - y0) / y0
    print(f"s={rec.s_index} t={rec.t_index}  median |dy|/y = {np.median(rel):.3f}")

###############################################################################
# The response perturbation is proportional: entry (i, j) gets std alpha*R_ij.
d = np.stack([perturb_response(R, 0.05, RngSeed(5).child(i)).entries - R.entries for i in range(2000)])
ratio = d.std(axis=0)[R.entries > 0] / (0.05 * R.entries[R.entries > 0])
print("std / (alpha R): mean %.3f, spread %.3f" % (ratio.mean(), ratio.std()))

###############################################################################
# With both noise levels at zero every pair collapses to the clean readout.
quiet = augment(x, R, HdaConfig(alpha=0.0, sigma_eps=0.0), RngSeed(11))
print(all(np.array_equal(p.y.values, y0) for p, _ in quiet))
