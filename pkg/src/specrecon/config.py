"""Run configuration: an INI file whose values are JSON literals.

Every section and key is checked against a fixed schema; unknown sections or
keys are rejected.  ``defaults.ini`` (shipped with the package) holds the
default hyperparameters and documents every key.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field, replace
from importlib import resources

from .core import WavelengthGrid
from .errors import BadConfig, IoError
from .hda import HdaConfig
from .nnet.model import RespecArch
from .nnet.train import TrainConfig
from .simgen import SimConfig
from .solvers import SolverConfig

SCHEMA_VERSION = 1

SCHEMA = {
    "meta": {"schema_version"},
    "run": {"seed", "n_samples"},
    "device": {"K", "L", "seed", "scale", "source_id"},
    "sim": {"m_peaks", "mu_range", "gamma_range", "intensity_range"},
    "hda": {"s_outer", "t_inner", "alpha", "sigma_eps", "r_noise", "y_noise",
            "clamp_response", "relative_sigma"},
    "arch": {"rec_fc_dims", "dropout_p", "conv_channels", "conv_kernel", "pool_width",
             "rf_fc_dims"},
    "train": {"batch_size", "learning_rate", "iterations", "adam_beta1", "adam_beta2",
              "adam_eps", "loss", "log_every"},
    "solver": {"tv_lambda", "max_iter", "tol", "step_rule", "tv_relative"},
    "eval": {"min_prominence", "min_separation", "match_window", "wavelength_start",
             "wavelength_step"},
    "bench": {"repeats", "warmup"},
    "paths": {"response"},
}


@dataclass(frozen=True)
class DeviceConfig:
    """The synthetic response matrix used when no measured one is given."""

    K: int = 16
    L: int = 206
    seed: int = 7
    scale: float = 1e-5
    source_id: str = "synthetic"


@dataclass(frozen=True)
class EvalConfig:
    min_prominence: float = 0.05
    min_separation: int = 5
    match_window: int = 10
    wavelength_start: float = 400.0
    wavelength_step: float = 1.0

    def grid(self, count: int) -> WavelengthGrid:
        return WavelengthGrid(self.wavelength_start, self.wavelength_step, count)


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    n_samples: int = 8
    device: DeviceConfig = field(default_factory=DeviceConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    hda: HdaConfig = field(default_factory=HdaConfig)
    arch: RespecArch = field(default_factory=RespecArch)
    train: TrainConfig = field(default_factory=TrainConfig)
    log_every: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    bench_repeats: int = 5
    bench_warmup: int = 1
    response_path: str | None = None

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=int(seed), train=replace(self.train, seed=int(seed)))


def _parse(text: str, source: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise BadConfig(f"{source}: {exc}") from exc
    out = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise BadConfig(f"{source}: unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise BadConfig(f"{source}: unknown key {key!r} in [{sec}]")
            try:
                out.setdefault(sec, {})[key] = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise BadConfig(f"{source}: [{sec}] {key} = {raw!r} is not a JSON value") from exc
    version = out.get("meta", {}).get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise BadConfig(f"{source}: schema_version {version}, this build reads {SCHEMA_VERSION}")
    return out


def _merge(base: dict, over: dict) -> dict:
    out = {k: dict(v) for k, v in base.items()}
    for sec, vals in over.items():
        out.setdefault(sec, {}).update(vals)
    return out


def default_text() -> str:
    return resources.files(__package__).joinpath("defaults.ini").read_text(encoding="utf-8")


def _build(d: dict) -> RunConfig:
    dev = DeviceConfig(**d.get("device", {}))
    sim_d = dict(d.get("sim", {}))
    sim_d["grid"] = WavelengthGrid.index(dev.L).to_dict()
    run = d.get("run", {})
    seed = int(run.get("seed", 0))
    tr = dict(d.get("train", {}))
    log_every = int(tr.pop("log_every", 0))
    arch = RespecArch(input_dim=dev.K, output_dim=dev.L, **d.get("arch", {}))
    bench = d.get("bench", {})
    return RunConfig(
        seed=seed,
        n_samples=int(run.get("n_samples", 8)),
        device=dev,
        sim=SimConfig.from_dict(sim_d),
        hda=HdaConfig.from_dict(d.get("hda", {})),
        arch=arch,
        train=TrainConfig(seed=seed, **tr),
        log_every=log_every,
        solver=SolverConfig(**d.get("solver", {})),
        eval=EvalConfig(**d.get("eval", {})),
        bench_repeats=int(bench.get("repeats", 5)),
        bench_warmup=int(bench.get("warmup", 1)),
        response_path=d.get("paths", {}).get("response"),
    )


def load_config(path=None, text: str | None = None) -> RunConfig:
    """Defaults overlaid with the file at ``path`` (or ``text``), validated."""
    d = _parse(default_text(), "defaults.ini")
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise IoError(f"cannot read config {path}: {exc}") from exc
    if text is not None:
        d = _merge(d, _parse(text, str(path or "<config>")))
    try:
        return _build(d)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, BadConfig):
            raise
        raise BadConfig(f"invalid configuration: {exc}") from exc
