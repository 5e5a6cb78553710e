"""Hierarchical data augmentation.

For each simulated spectrum the response matrix is perturbed ``S`` times
(outer level); every perturbed readout is then perturbed ``T`` times with
rectified Gaussian readout noise (inner level), giving ``S * T`` training
pairs that all share the original spectrum as their label.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np

from .core import (EncodedSignal, LabeledPair, Provenance, ResponseMatrix, RngSeed,
                   Spectrum, as_seed, encode, gaussian_stream)
from .errors import DimensionMismatch, NormalizedInput


class ResponseNoise(str, enum.Enum):
    GAUSSIAN_PROPORTIONAL = "gaussian_proportional"


class SignalNoise(str, enum.Enum):
    RELU_GAUSSIAN = "relu_gaussian"


@dataclass(frozen=True)
class HdaConfig:
    s_outer: int = 2
    t_inner: int = 4
    alpha: float = 5e-2
    sigma_eps: float = 1e-5
    r_noise: ResponseNoise = ResponseNoise.GAUSSIAN_PROPORTIONAL
    y_noise: SignalNoise = SignalNoise.RELU_GAUSSIAN
    clamp_response: bool = False
    # sigma_eps is an absolute scale unless this is set, in which case the
    # noise std is sigma_eps * mean(y).
    relative_sigma: bool = False

    def __post_init__(self):
        if int(self.s_outer) < 1 or int(self.t_inner) < 1:
            raise ValueError("s_outer and t_inner must be >= 1")
        if self.alpha < 0 or self.sigma_eps < 0:
            raise ValueError("alpha and sigma_eps must be non-negative")
        object.__setattr__(self, "r_noise", ResponseNoise(self.r_noise))
        object.__setattr__(self, "y_noise", SignalNoise(self.y_noise))

    @classmethod
    def disabled(cls) -> "HdaConfig":
        """No augmentation: one noiseless copy per spectrum."""
        return cls(s_outer=1, t_inner=1, alpha=0.0, sigma_eps=0.0)

    @property
    def enabled(self) -> bool:
        return self.alpha > 0 or self.sigma_eps > 0

    @property
    def fan_out(self) -> int:
        return self.s_outer * self.t_inner

    def to_dict(self) -> dict:
        d = asdict(self)
        d["r_noise"] = self.r_noise.value
        d["y_noise"] = self.y_noise.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HdaConfig":
        return cls(**d)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class PerturbationRecord:
    s_index: int
    t_index: int
    delta_seed: RngSeed
    eps_seed: RngSeed

    def to_dict(self) -> dict:
        return {"s_index": self.s_index, "t_index": self.t_index,
                "delta_seed": self.delta_seed.to_dict(), "eps_seed": self.eps_seed.to_dict()}


def delta_seed(seed: RngSeed, s: int) -> RngSeed:
    return as_seed(seed).child("delta", s)


def eps_seed(seed: RngSeed, s: int, t: int) -> RngSeed:
    return as_seed(seed).child("eps", s, t)


def _response_noise(R_entries: np.ndarray, alpha: float, seed: RngSeed) -> np.ndarray:
    g = gaussian_stream(seed, R_entries.size).reshape(R_entries.shape)
    return alpha * R_entries * g


def perturb_response(R: ResponseMatrix, alpha: float, seed: RngSeed, clamp: bool = False) -> ResponseMatrix:
    """``R + Delta`` with ``Delta_ij ~ N(0, (alpha * R_ij)^2)`` i.i.d.

    Entries are left free to go negative unless ``clamp`` is set.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if alpha == 0:
        return R
    E = R.entries + _response_noise(R.entries, alpha, seed)
    if clamp:
        E = np.maximum(E, 0.0)
    return ResponseMatrix(E, f"{R.source_id}+delta", perturbed=not clamp)


def _signal_noise(n: int, sigma: float, seed: RngSeed) -> np.ndarray:
    return np.maximum(0.0, sigma * gaussian_stream(seed, n))


def perturb_signal(y: EncodedSignal, sigma_eps: float, seed: RngSeed,
                   relative: bool = False) -> EncodedSignal:
    """Add ``max(0, g)`` with ``g ~ N(0, sigma^2)`` to every raw readout."""
    if y.normalized:
        raise NormalizedInput("perturb_signal must run before normalisation")
    if sigma_eps < 0:
        raise ValueError("sigma_eps must be non-negative")
    if sigma_eps == 0:
        return y
    sigma = sigma_eps * float(np.mean(y.values)) if relative else sigma_eps
    return EncodedSignal(y.values + _signal_noise(len(y), sigma, seed))


def augment(x: Spectrum, R: ResponseMatrix, cfg: HdaConfig, seed: RngSeed
            ) -> list[tuple[LabeledPair, PerturbationRecord]]:
    """Expand one spectrum into ``S * T`` augmented pairs, ordered by (s, t)."""
    if R.cols != len(x):
        raise DimensionMismatch(f"R has {R.cols} columns but x has length {len(x)}")
    seed = as_seed(seed)
    out = []
    for s in range(cfg.s_outer):
        ds = delta_seed(seed, s)
        Rs = perturb_response(R, cfg.alpha, ds, clamp=cfg.clamp_response)
        # readouts are physically non-negative; this also keeps the log defined
        ys = EncodedSignal(np.maximum(Rs.entries @ x.values, 0.0))
        for t in range(cfg.t_inner):
            es = eps_seed(seed, s, t)
            y = perturb_signal(ys, cfg.sigma_eps, es, relative=cfg.relative_sigma)
            pair = LabeledPair(x, y, Provenance.AUGMENTED, s, t, seed_trace=(seed, ds, es))
            out.append((pair, PerturbationRecord(s, t, ds, es)))
    return out


def augment_batch(X: np.ndarray, R: ResponseMatrix, cfg: HdaConfig, seeds) -> tuple[np.ndarray, np.ndarray]:
    """Array version of :func:`augment` for an (n, L) batch of spectra.

    Returns ``(Y, Xrep)`` with ``n * S * T`` rows, sample-major then (s, t),
    matching ``augment(X[i], R, cfg, seeds[i])`` row for row.
    """
    X = np.asarray(X, dtype=np.float64)
    n, L = X.shape
    if R.cols != L:
        raise DimensionMismatch(f"R has {R.cols} columns but x has length {L}")
    S, T, K = cfg.s_outer, cfg.t_inner, R.rows
    Y = np.empty((n, S, T, K))
    E = R.entries
    for i, sd in enumerate(seeds):
        sd = as_seed(sd)
        for s in range(S):
            if cfg.alpha > 0:
                Es = E + _response_noise(E, cfg.alpha, delta_seed(sd, s))
                if cfg.clamp_response:
                    Es = np.maximum(Es, 0.0)
            else:
                Es = E
            ys = np.maximum(Es @ X[i], 0.0)
            if cfg.sigma_eps > 0:
                sigma = cfg.sigma_eps * float(np.mean(ys)) if cfg.relative_sigma else cfg.sigma_eps
                for t in range(T):
                    Y[i, s, t] = ys + _signal_noise(K, sigma, eps_seed(sd, s, t))
            else:
                Y[i, s] = ys
    return Y.reshape(n * S * T, K), np.repeat(X, S * T, axis=0)


def shifted_device(R: ResponseMatrix, alpha: float, seed: RngSeed) -> ResponseMatrix:
    """A fixed "true" device response that differs from the measured ``R`` by
    one proportional Gaussian draw, clamped to stay physical."""
    return perturb_response(R, alpha, as_seed(seed).child("device"), clamp=True)


def device_readouts(X: np.ndarray, R_device: ResponseMatrix, sigma: float, seeds) -> np.ndarray:
    """Readouts of a batch through ``R_device`` plus per-sample rectified noise."""
    Y = np.maximum(np.asarray(X) @ R_device.entries.T, 0.0)
    if sigma > 0:
        for i, sd in enumerate(seeds):
            Y[i] += _signal_noise(R_device.rows, sigma, as_seed(sd).child("readout"))
    return Y
