"""Training loop and single-pass inference."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from ..core import EncodedSignal, ResponseMatrix, RngSeed, Spectrum, WavelengthGrid, as_seed
from ..errors import DimensionMismatch
from ..hda import HdaConfig, augment_batch
from ..simgen import SimConfig, simulate_batch
from .adam import AdamState, adam_step
from .model import ReSpecNN, RespecArch
from .preprocess import log_min_max_rows

log = logging.getLogger(__name__)

HISTORY_TAIL = 2000


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 256
    learning_rate: float = 3e-4
    iterations: int = 20000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    loss: str = "mse"
    seed: RngSeed = field(default_factory=lambda: RngSeed(0))

    def __post_init__(self):
        if self.loss != "mse":
            raise ValueError(f"unsupported loss {self.loss!r}")
        if int(self.batch_size) < 1 or int(self.iterations) < 0:
            raise ValueError("batch_size must be >= 1 and iterations >= 0")
        object.__setattr__(self, "seed", as_seed(self.seed))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seed"] = self.seed.to_dict()
        return d


@dataclass
class ModelCheckpoint:
    arch: RespecArch
    params: dict
    adam_state: AdamState
    train_meta: dict = field(default_factory=dict)

    @cached_property
    def model(self) -> ReSpecNN:
        net = ReSpecNN(self.arch)
        net.load_parameters(self.params)
        return net

    @classmethod
    def from_model(cls, model: ReSpecNN, state: AdamState | None = None, meta=None):
        params = {k: v.copy() for k, v in model.parameters().items()}
        state = state or AdamState()
        return cls(model.arch, params, state, dict(meta or {}))


def response_digest(R: ResponseMatrix) -> str:
    return hashlib.sha256(np.ascontiguousarray(R.entries).tobytes()).hexdigest()[:16]


def draw_batch(R: ResponseMatrix, sim_cfg: SimConfig, hda_cfg: HdaConfig, n_spectra: int,
               seed: RngSeed) -> tuple[np.ndarray, np.ndarray]:
    """One training batch: ``n_spectra`` fresh spectra expanded by HDA.

    Returns normalised readouts and their target spectra, ``n_spectra * S * T``
    rows each.
    """
    seeds = [seed.child("sample", i) for i in range(n_spectra)]
    X, _ = simulate_batch(sim_cfg, [s.child("sim") for s in seeds])
    Y, Xrep = augment_batch(X, R, hda_cfg, [s.child("hda") for s in seeds])
    return log_min_max_rows(Y), Xrep


def mse_loss(pred, target):
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def train(R: ResponseMatrix, sim_cfg: SimConfig, hda_cfg: HdaConfig, train_cfg: TrainConfig,
          arch: RespecArch | None = None, resume: ModelCheckpoint | None = None,
          log_every: int = 0) -> ModelCheckpoint:
    """Train ReSpecNN on freshly simulated, augmented batches.

    Every iteration draws ``batch_size`` new spectra (so ``batch_size * S * T``
    training rows), log-min-max normalises the readouts and takes one Adam
    step on the mean squared error.  The run is a deterministic function of
    the inputs; iteration ``i`` always uses the batch seeded by
    ``train_cfg.seed.child("iter", i)``, so a resumed run continues the same
    sequence.
    """
    if R.cols != sim_cfg.grid.count:
        raise DimensionMismatch(f"R has {R.cols} columns but the grid has {sim_cfg.grid.count} points")
    if resume is not None:
        arch = resume.arch
        model = ReSpecNN(arch)
        model.load_parameters(resume.params)
        state = AdamState({k: v.copy() for k, v in resume.adam_state.m.items()},
                          {k: v.copy() for k, v in resume.adam_state.v.items()},
                          resume.adam_state.step)
        history = list(resume.train_meta.get("loss_history_tail", []))
    else:
        arch = arch or RespecArch(input_dim=R.rows, output_dim=R.cols)
        model = ReSpecNN(arch, train_cfg.seed)
        state = AdamState()
        history = []
    if arch.input_dim != R.rows or arch.output_dim != R.cols:
        raise DimensionMismatch(f"architecture {arch.input_dim}->{arch.output_dim} does not fit R {R.shape}")

    seed = train_cfg.seed
    params = model.parameters()
    grads = model.gradients
    start = state.step
    for it in range(start, start + train_cfg.iterations):
        bseed = seed.child("iter", it)
        Yn, X = draw_batch(R, sim_cfg, hda_cfg, train_cfg.batch_size, bseed)
        model.set_dropout_rng(bseed.child("dropout").generator())
        pred = model.forward(Yn, train_mode=True)
        loss, dpred = mse_loss(pred, X)
        model.backward(dpred)
        adam_step(params, grads(), state, train_cfg.learning_rate, train_cfg.adam_beta1,
                  train_cfg.adam_beta2, train_cfg.adam_eps)
        history.append(loss)
        if log_every and (it + 1) % log_every == 0:
            log.info("iter %d loss %.6f", it + 1, float(np.mean(history[-log_every:])))

    meta = {
        "iterations": state.step,
        "loss_history_tail": history[-HISTORY_TAIL:],
        "seed": seed.to_dict(),
        "hda": "on" if hda_cfg.enabled else "off",
        "hda_config": hda_cfg.to_dict(),
        "hda_config_hash": hda_cfg.digest(),
        "sim_config": sim_cfg.to_dict(),
        "train_config": train_cfg.to_dict(),
        "response": {"source_id": R.source_id, "sha256_16": response_digest(R)},
    }
    return ModelCheckpoint.from_model(model, state, meta)


def reconstruct(net, y_raw) -> Spectrum:
    """Single forward pass: log-min-max normalise, then run the network in
    eval mode.  ``net`` may be a :class:`ModelCheckpoint` or a model."""
    model = net.model if isinstance(net, ModelCheckpoint) else net
    values = y_raw.values if isinstance(y_raw, EncodedSignal) else np.asarray(y_raw, dtype=np.float64)
    out = model.forward(log_min_max_rows(values)[0], train_mode=False)
    return Spectrum(WavelengthGrid.index(model.arch.output_dim), out)


def reconstruct_batch(net, Y_raw) -> np.ndarray:
    model = net.model if isinstance(net, ModelCheckpoint) else net
    return model.forward(log_min_max_rows(Y_raw), train_mode=False)
