"""Domain types, the linear forward model and seeded randomness.

All arrays are float64 and are frozen (read-only) once wrapped in one of the
types below, so instances can be shared freely between threads.
"""

from __future__ import annotations

import enum
import hashlib
import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

DEFAULT_K = 16
DEFAULT_L = 206


def _frozen(a, ndim=None) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise DimensionMismatch(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class WavelengthGrid:
    """Equally spaced wavelength samples ``start + j * step``, ``j < count``.

    The simulation works in grid-index units; the grid only maps indices to
    nanometres for reporting.
    """

    start: float = 0.0
    step: float = 1.0
    count: int = DEFAULT_L

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"grid step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise ValueError(f"grid count must be an integer >= 2, got {self.count}")
        object.__setattr__(self, "count", int(self.count))

    @classmethod
    def index(cls, count: int = DEFAULT_L) -> "WavelengthGrid":
        return cls(0.0, 1.0, count)

    @classmethod
    def nm(cls, count: int = DEFAULT_L, start: float = 400.0, step: float = 1.0) -> "WavelengthGrid":
        """Index j maps to ``start + j`` nm; the default reporting grid."""
        return cls(start, step, count)

    def value(self, j):
        return self.start + np.asarray(j, dtype=np.float64) * self.step

    @property
    def values(self) -> np.ndarray:
        return self.start + np.arange(self.count, dtype=np.float64) * self.step

    def to_dict(self) -> dict:
        return {"start": self.start, "step": self.step, "count": self.count}

    @classmethod
    def from_dict(cls, d: dict) -> "WavelengthGrid":
        return cls(float(d["start"]), float(d["step"]), int(d["count"]))


@dataclass(frozen=True, eq=False)
class Spectrum:
    grid: WavelengthGrid
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values, ndim=1)
        if v.shape[0] != self.grid.count:
            raise DimensionMismatch(
                f"spectrum has {v.shape[0]} values but grid has {self.grid.count}")
        if np.any(v < 0):
            raise ValueError("spectrum values must be non-negative")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class ResponseMatrix:
    """K x L responsivity matrix of the spectral encoders.

    Entries are non-negative unless ``perturbed`` is set, which marks a matrix
    produced by noise injection (entries may then dip below zero).
    """

    entries: np.ndarray
    source_id: str = "unspecified"
    perturbed: bool = False

    def __post_init__(self):
        e = _frozen(self.entries, ndim=2)
        if not self.perturbed and np.any(e < 0):
            raise ValueError("response matrix entries must be non-negative")
        dead = np.flatnonzero(~np.any(e != 0, axis=1))
        if dead.size:
            raise ValueError(f"response matrix has all-zero rows (dead detectors): {dead.tolist()}")
        object.__setattr__(self, "entries", e)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


@dataclass(frozen=True, eq=False)
class EncodedSignal:
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        v = _frozen(self.values, ndim=1)
        if self.normalized:
            if v.size and (abs(v.min()) > 1e-12 or abs(v.max() - 1.0) > 1e-12):
                raise ValueError("a normalized signal must span exactly [0, 1]")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.shape[0]

    @classmethod
    def external(cls, values) -> "EncodedSignal":
        """Wrap a loaded device readout; negative entries only warn."""
        sig = cls(values)
        if np.any(sig.values < 0):
            warnings.warn("external readout has negative entries", RuntimeWarning, stacklevel=2)
        return sig


class Provenance(enum.Enum):
    SIMULATED = "simulated"
    AUGMENTED = "augmented"
    EXTERNAL = "external"


@dataclass(frozen=True, eq=False)
class LabeledPair:
    x: Spectrum
    y: EncodedSignal
    provenance: Provenance = Provenance.SIMULATED
    s_index: int | None = None
    t_index: int | None = None
    seed_trace: tuple["RngSeed", ...] = ()


# --------------------------------------------------------------------------
# Seeded randomness.  Every stochastic operation takes an explicit RngSeed and
# draws from a Philox (counter-based) generator keyed by a blake2b digest, so
# streams are identical across runs and platforms.


def _digest64(*parts) -> int:
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        if isinstance(p, str):
            b = p.encode("utf-8")
            h.update(b"s" + struct.pack("<I", len(b)) + b)
        else:
            h.update(b"i" + struct.pack("<Q", int(p) & 0xFFFFFFFFFFFFFFFF))
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class RngSeed:
    seed: int
    stream_label: str = ""

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "seed", int(self.seed))

    def child(self, *path) -> "RngSeed":
        """Derive an independent seed for a sub-stream named by ``path``.

        ``path`` items are ints or strings, e.g. ``seed.child("batch", 3)``.
        """
        label = "/".join(str(p) for p in path)
        full = f"{self.stream_label}/{label}" if self.stream_label else label
        return RngSeed(_digest64(self.seed, self.stream_label, *path), full)

    def generator(self) -> np.random.Generator:
        key = _digest64(self.seed, "philox-key", self.stream_label)
        return np.random.Generator(np.random.Philox(key=key))

    def to_dict(self) -> dict:
        return {"seed": self.seed, "stream_label": self.stream_label}

    @classmethod
    def from_dict(cls, d: dict) -> "RngSeed":
        return cls(int(d["seed"]), str(d.get("stream_label", "")))


def as_seed(seed) -> RngSeed:
    return seed if isinstance(seed, RngSeed) else RngSeed(int(seed))


def gaussian_stream(seed: RngSeed, n: int) -> np.ndarray:
    """``n`` standard-normal draws, fully determined by ``seed``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return as_seed(seed).generator().standard_normal(n)


# --------------------------------------------------------------------------


def encode(R: ResponseMatrix, x: Spectrum) -> EncodedSignal:
    """Noiseless forward model ``y = R @ x``."""
    values = x.values if isinstance(x, Spectrum) else np.asarray(x, dtype=np.float64)
    if values.shape[-1] != R.cols:
        raise DimensionMismatch(f"R has {R.cols} columns but x has length {values.shape[-1]}")
    return EncodedSignal(R.entries @ values)


def encode_batch(R: ResponseMatrix, X: np.ndarray) -> np.ndarray:
    """Row-wise ``encode`` for an (n, L) array; returns (n, K)."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != R.cols:
        raise DimensionMismatch(f"R has {R.cols} columns but x has length {X.shape[-1]}")
    return X @ R.entries.T


def synthetic_response(K: int = DEFAULT_K, L: int = DEFAULT_L, seed: RngSeed | int = 0,
                       scale: float = 1e-4) -> ResponseMatrix:
    """Random broadband photodetector-like response matrix.

    Each row is a sum of two or three wide Gaussian bumps on a small baseline,
    multiplied by a smooth long-pass edge, then scaled so that its maximum is
    ``scale``.  The default scale puts readouts of unit-height spectra around
    1e-3, where a readout noise of 1e-5 is a ~1% effect.
    """
    seed = as_seed(seed)
    rng = seed.generator()
    j = np.arange(L, dtype=np.float64)
    rows = []
    for _ in range(K):
        n_bumps = int(rng.integers(2, 4))
        centers = rng.uniform(-0.1 * L, 1.1 * L, n_bumps)
        widths = rng.uniform(0.12 * L, 0.35 * L, n_bumps)
        amps = rng.uniform(0.3, 1.0, n_bumps)
        r = 0.05 + np.sum(amps[:, None] * np.exp(-0.5 * ((j - centers[:, None]) / widths[:, None]) ** 2), axis=0)
        edge = rng.uniform(-0.2 * L, 0.6 * L)
        r *= 1.0 / (1.0 + np.exp(-(j - edge) / (0.05 * L)))
        rows.append(r / r.max())
    source = f"synthetic:K={K}:L={L}:seed={seed.seed}:{seed.stream_label}"
    return ResponseMatrix(scale * np.array(rows), source)
