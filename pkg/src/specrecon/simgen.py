"""Device-informed simulated spectra built from sums of Lorentzian peaks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (LabeledPair, Provenance, ResponseMatrix, RngSeed, Spectrum,
                   WavelengthGrid, as_seed, encode)
from .errors import DegenerateSpectrum, DimensionMismatch


@dataclass(frozen=True)
class PeakParams:
    mu: float
    gamma: float
    intensity: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.intensity > 0:
            raise ValueError(f"intensity must be positive, got {self.intensity}")


def _range(r, name):
    lo, hi = (float(v) for v in r)
    if not lo <= hi:
        raise ValueError(f"{name} range must satisfy lower <= upper, got {r}")
    return lo, hi


@dataclass(frozen=True)
class SimConfig:
    """Peak-sampling recipe.

    ``m_peaks`` is either a fixed peak count or an inclusive ``(lo, hi)`` range
    sampled uniformly per spectrum.
    """

    m_peaks: int | tuple[int, int] = 1
    mu_range: tuple[float, float] = (0.0, 205.0)
    gamma_range: tuple[float, float] = (15.0, 20.0)
    intensity_range: tuple[float, float] = (0.25, 1.0)
    grid: WavelengthGrid = field(default_factory=WavelengthGrid.index)

    def __post_init__(self):
        m = self.m_peaks
        if isinstance(m, (tuple, list)):
            lo, hi = (int(v) for v in m)
            if not 1 <= lo <= hi:
                raise ValueError(f"m_peaks range must satisfy 1 <= lo <= hi, got {m}")
            object.__setattr__(self, "m_peaks", (lo, hi))
        elif int(m) < 1:
            raise ValueError(f"m_peaks must be >= 1, got {m}")
        else:
            object.__setattr__(self, "m_peaks", int(m))
        object.__setattr__(self, "mu_range", _range(self.mu_range, "mu"))
        object.__setattr__(self, "gamma_range", _range(self.gamma_range, "gamma"))
        object.__setattr__(self, "intensity_range", _range(self.intensity_range, "intensity"))
        if self.gamma_range[0] <= 0 or self.intensity_range[0] <= 0:
            raise ValueError("gamma and intensity ranges must be strictly positive")

    def to_dict(self) -> dict:
        return {
            "m_peaks": list(self.m_peaks) if isinstance(self.m_peaks, tuple) else self.m_peaks,
            "mu_range": list(self.mu_range),
            "gamma_range": list(self.gamma_range),
            "intensity_range": list(self.intensity_range),
            "grid": self.grid.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        m = d.get("m_peaks", 1)
        return cls(
            m_peaks=tuple(m) if isinstance(m, (list, tuple)) else int(m),
            mu_range=tuple(d.get("mu_range", (0.0, 205.0))),
            gamma_range=tuple(d.get("gamma_range", (15.0, 20.0))),
            intensity_range=tuple(d.get("intensity_range", (0.25, 1.0))),
            grid=WavelengthGrid.from_dict(d["grid"]) if "grid" in d else WavelengthGrid.index(),
        )


def lorentzian(p: PeakParams, grid: WavelengthGrid) -> np.ndarray:
    """Peak-height parameterised Lorentzian ``I * g^2 / ((lam - mu)^2 + g^2)``.

    The curve equals ``I`` at ``mu`` and ``I / 2`` at ``mu +- gamma``.
    """
    d = grid.values - p.mu
    g2 = p.gamma * p.gamma
    return p.intensity * g2 / (d * d + g2)


def sample_peaks(cfg: SimConfig, rng: np.random.Generator) -> list[PeakParams]:
    if isinstance(cfg.m_peaks, tuple):
        m = int(rng.integers(cfg.m_peaks[0], cfg.m_peaks[1] + 1))
    else:
        m = cfg.m_peaks
    mu = rng.uniform(*cfg.mu_range, size=m)
    gamma = rng.uniform(*cfg.gamma_range, size=m)
    inten = rng.uniform(*cfg.intensity_range, size=m)
    return [PeakParams(float(a), float(b), float(c)) for a, b, c in zip(mu, gamma, inten)]


def _peaks_to_values(peaks, lam):
    mu = np.array([p.mu for p in peaks])[:, None]
    g2 = np.array([p.gamma for p in peaks])[:, None] ** 2
    inten = np.array([p.intensity for p in peaks])[:, None]
    curve = np.sum(inten * g2 / ((lam - mu) ** 2 + g2), axis=0)
    top = curve.max()
    if top < 1e-12:
        raise DegenerateSpectrum(f"pre-normalisation maximum {top:.3g} is below 1e-12")
    return curve / top


def simulate_spectrum(cfg: SimConfig, seed: RngSeed) -> tuple[Spectrum, list[PeakParams]]:
    """Draw M peaks i.i.d. uniformly from the configured ranges, sum, and
    divide by the maximum so the spectrum peaks at exactly 1."""
    peaks = sample_peaks(cfg, as_seed(seed).generator())
    return Spectrum(cfg.grid, _peaks_to_values(peaks, cfg.grid.values)), peaks


def simulate_batch(cfg: SimConfig, seeds) -> tuple[np.ndarray, list[list[PeakParams]]]:
    """Array version of :func:`simulate_spectrum` over a sequence of seeds.

    Row ``i`` equals ``simulate_spectrum(cfg, seeds[i])[0].values`` exactly.
    """
    lam = cfg.grid.values
    X = np.empty((len(seeds), cfg.grid.count))
    all_peaks = []
    for i, s in enumerate(seeds):
        peaks = sample_peaks(cfg, as_seed(s).generator())
        X[i] = _peaks_to_values(peaks, lam)
        all_peaks.append(peaks)
    return X, all_peaks


def simulate_pair(cfg: SimConfig, R: ResponseMatrix, seed: RngSeed) -> LabeledPair:
    if R.cols != cfg.grid.count:
        raise DimensionMismatch(f"R has {R.cols} columns but the grid has {cfg.grid.count} points")
    seed = as_seed(seed)
    x, _ = simulate_spectrum(cfg, seed)
    return LabeledPair(x, encode(R, x), Provenance.SIMULATED, seed_trace=(seed,))


def sample_seed(master: RngSeed, i: int) -> RngSeed:
    """Per-sample seed used by :func:`generate_dataset`."""
    return as_seed(master).child("sample", i)


def generate_dataset(cfg: SimConfig, R: ResponseMatrix, n: int, seed: RngSeed) -> list[LabeledPair]:
    if n < 1:
        raise ValueError("n must be >= 1")
    return [simulate_pair(cfg, R, sample_seed(seed, i)) for i in range(n)]
