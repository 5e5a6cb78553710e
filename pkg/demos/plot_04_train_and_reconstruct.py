"""
Training ReSpecNN
=================

The network maps log-min-max normalised readouts to a spectrum in (0, 1).
Every training iteration draws fresh spectra, expands them through
augmentation and takes one Adam step.  This demo trains briefly; the
acceptance suite trains for 5,000 iterations.
"""

import numpy as np

from specrecon.core import RngSeed, synthetic_response
from specrecon.hda import HdaConfig, device_readouts, shifted_device
from specrecon.nnet.checkpoint import dumps, loads
from specrecon.nnet.model import ReSpecNN, RespecArch
from specrecon.nnet.train import ModelCheckpoint, TrainConfig, reconstruct_batch, train
from specrecon.simgen import SimConfig, simulate_batch

R = synthetic_response(seed=7, scale=1e-5)
sim = SimConfig(m_peaks=(1, 3))
arch = RespecArch()
print("parameters:", ReSpecNN(arch).n_parameters())

###############################################################################
# A short run.  Raise ``iterations`` for a usable model.
cfg = TrainConfig(batch_size=16, iterations=200, seed=RngSeed(1))
ck = train(R, sim, HdaConfig(), cfg, arch=arch)
h = ck.train_meta["loss_history_tail"]
print(f"loss {np.mean(h[:20]):.4f} -> {np.mean(h[-20:]):.4f}")

###############################################################################
# Test on clean readouts and on a "pseudo-real" device: an unseen draw of R
# plus unseen readout noise.
seeds = [RngSeed(2024).child(i) for i in range(100)]
X, _ = simulate_batch(sim, seeds)
Rdev = shifted_device(R, 0.05, RngSeed(4242))
fresh = ModelCheckpoint.from_model(ReSpecNN(arch, 99))
for name, model in (("untrained", fresh), ("trained", ck)):
    clean = np.sqrt(np.mean((reconstruct_batch(model, X @ R.entries.T) - X) ** 2))
    real = np.sqrt(np.mean((reconstruct_batch(model, device_readouts(X, Rdev, 1e-5, seeds)) - X) ** 2))
    print(f"{name:9s} rmse clean {clean:.4f}  pseudo-real {real:.4f}")

###############################################################################
# Checkpoints round-trip bit for bit.
again = loads(dumps(ck))
print(np.array_equal(reconstruct_batch(again, X[:3] @ R.entries.T), reconstruct_batch(ck, X[:3] @ R.entries.T)))
