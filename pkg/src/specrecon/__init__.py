"""Reconstructive spectroscopy from a handful of broadband detector readouts.

Subpackages and modules
-----------------------
core        domain types, the forward model ``y = R x`` and seeded RNG streams
simgen      Lorentzian-peak spectrum simulation
hda         hierarchical data augmentation of the response and readouts
solvers     least squares, NNLS and TV-regularised NNLS baselines
nnet        the numpy ReSpecNN network, training loop and checkpoints
evaluation  peak detection, matching and error metrics
bench       per-sample timing harness
io, config, cli   file formats, run configuration and the command line
"""

from .core import (DEFAULT_K, DEFAULT_L, EncodedSignal, LabeledPair, Provenance, ResponseMatrix,
                   RngSeed, Spectrum, WavelengthGrid, encode, encode_batch, gaussian_stream,
                   synthetic_response)
from .errors import *  # noqa: F401,F403
from .hda import HdaConfig, augment, augment_batch, perturb_response, perturb_signal
from .simgen import PeakParams, SimConfig, generate_dataset, lorentzian, simulate_pair, simulate_spectrum
from .solvers import SolveReport, SolverConfig, least_squares, nnls, nnls_tv, pinv_preprocess

__version__ = "0.1.0"
